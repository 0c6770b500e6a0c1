//! Self-contained text model files.
//!
//! ```text
//! coreball-svm v1
//! kernel rbf sigma2=0.5
//! C 10.0
//! classes 2 -1 1
//! machine -1 1 nsv=2
//! 0.5 1:1.0 3:0.25
//! -0.5 2:1.0
//! ```
//!
//! Reals are written with Rust's shortest round-trip formatting, so a
//! loaded model reproduces decision values bit for bit. Feature indices are
//! 1-based as in LIBSVM files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use coreball_core::{BinaryModel, ClassId, KernelSpec, OvoModel, SupportVector};

use crate::error::{Error, Result};
use crate::libsvm::{parse_features, write_features};

pub const HEADER: &str = "coreball-svm v1";

pub fn kernel_to_string(spec: &KernelSpec) -> String {
    match *spec {
        KernelSpec::Rbf { sigma2 } => format!("rbf sigma2={sigma2:?}"),
        KernelSpec::Linear => "linear".to_string(),
        KernelSpec::PolyInhomogeneous { degree } => format!("poly degree={degree}"),
        KernelSpec::PolyHomogeneous { gamma, degree } => format!("polyh gamma={gamma:?} degree={degree}"),
    }
}

pub fn serialize_model(model: &OvoModel) -> Result<String> {
    let machines = model.machines();
    let first = &machines[0];
    let mut out = String::new();
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(out, "kernel {}", kernel_to_string(&first.kernel));
    let _ = writeln!(out, "C {:?}", first.c);
    let _ = write!(out, "classes {}", model.classes().len());
    for c in model.classes() {
        let _ = write!(out, " {c}");
    }
    out.push('\n');
    for m in machines {
        if m.kernel != first.kernel || m.c.to_bits() != first.c.to_bits() {
            return Err(Error::Usage("all machines of a model file must share kernel and C".into()));
        }
        if m.support.is_empty() {
            return Err(coreball_core::Error::EmptySupport.into());
        }
        let _ = writeln!(out, "machine {} {} nsv={}", m.positive_class, m.negative_class, m.support.len());
        for sv in &m.support {
            let _ = write!(out, "{:?}", sv.coef);
            write_features(&mut out, &sv.features);
            out.push('\n');
        }
    }
    Ok(out)
}

pub fn write_model(path: impl AsRef<Path>, model: &OvoModel) -> Result<()> {
    fs::write(path, serialize_model(model)?)?;
    Ok(())
}

pub fn read_model(path: impl AsRef<Path>) -> Result<OvoModel> {
    deserialize_model(&fs::read_to_string(path)?)
}

/// Line cursor that remembers 1-based line numbers for error messages.
struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> Result<&'a str> {
        match self.inner.next() {
            Some((n, text)) => {
                self.line = n + 1;
                Ok(text)
            }
            None => Err(Error::model(self.line + 1, format!("unexpected end of file, expected {what}"))),
        }
    }

    fn keyed(&mut self, key: &str) -> Result<std::str::SplitWhitespace<'a>> {
        let text = self.next(key)?;
        let mut tokens = text.split_whitespace();
        if tokens.next() != Some(key) {
            return Err(self.err(format!("expected '{key}' section")));
        }
        Ok(tokens)
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::model(self.line, message)
    }
}

fn value<T: std::str::FromStr>(lines: &Lines<'_>, token: Option<&str>, key: &str) -> Result<T> {
    let token = token.ok_or_else(|| lines.err(format!("missing {key}")))?;
    let raw = match token.split_once('=') {
        Some((k, v)) if k == key => v,
        Some(_) => return Err(lines.err(format!("expected {key}=<value>, got '{token}'"))),
        None => token,
    };
    raw.parse().map_err(|_| lines.err(format!("invalid {key} '{raw}'")))
}

fn parse_kernel(lines: &Lines<'_>, mut tokens: std::str::SplitWhitespace<'_>) -> Result<KernelSpec> {
    let spec = match tokens.next() {
        Some("rbf") => KernelSpec::Rbf { sigma2: value(lines, tokens.next(), "sigma2")? },
        Some("linear") => KernelSpec::Linear,
        Some("poly") => KernelSpec::PolyInhomogeneous { degree: value(lines, tokens.next(), "degree")? },
        Some("polyh") => KernelSpec::PolyHomogeneous {
            gamma: value(lines, tokens.next(), "gamma")?,
            degree: value(lines, tokens.next(), "degree")?,
        },
        other => return Err(lines.err(format!("unknown kernel '{}'", other.unwrap_or("")))),
    };
    if tokens.next().is_some() {
        return Err(lines.err("trailing tokens after kernel"));
    }
    spec.validate().map_err(|e| lines.err(e.to_string()))?;
    Ok(spec)
}

pub fn deserialize_model(text: &str) -> Result<OvoModel> {
    let mut lines = Lines { inner: text.lines().enumerate(), line: 0 };
    let header = lines.next("header")?;
    if header != HEADER {
        let message = match header.strip_prefix("coreball-svm ") {
            Some(version) => format!("unsupported version '{version}'"),
            None => "not a coreball-svm model".to_string(),
        };
        return Err(lines.err(message));
    }

    let tokens = lines.keyed("kernel")?;
    let kernel = parse_kernel(&lines, tokens)?;
    let mut tokens = lines.keyed("C")?;
    let c: f64 = value(&lines, tokens.next(), "C")?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(lines.err("C must be positive"));
    }

    let mut tokens = lines.keyed("classes")?;
    let k: usize = value(&lines, tokens.next(), "class count")?;
    let classes = tokens.map(|t| value(&lines, Some(t), "class id")).collect::<Result<Vec<ClassId>>>()?;
    if classes.len() != k {
        return Err(lines.err(format!("expected {k} class ids, found {}", classes.len())));
    }
    let pairs = k * k.saturating_sub(1) / 2;

    let mut machines = Vec::with_capacity(pairs);
    for _ in 0..pairs {
        let mut tokens = lines.keyed("machine")?;
        let positive_class = value(&lines, tokens.next(), "positive class")?;
        let negative_class = value(&lines, tokens.next(), "negative class")?;
        let nsv: usize = value(&lines, tokens.next(), "nsv")?;
        if tokens.next().is_some() {
            return Err(lines.err("trailing tokens after machine header"));
        }
        if nsv == 0 {
            return Err(lines.err("machine without support vectors"));
        }
        let mut support = Vec::with_capacity(nsv);
        for _ in 0..nsv {
            let text = lines.next("support vector")?;
            let mut tokens = text.split_whitespace();
            let coef: f64 = value(&lines, tokens.next(), "coefficient")?;
            if coef == 0.0 || !coef.is_finite() {
                return Err(lines.err("support coefficient must be finite and non-zero"));
            }
            let features = parse_features(tokens, lines.line).map_err(|e| match e {
                Error::Parse { line, message } => Error::model(line, message),
                other => other,
            })?;
            support.push(SupportVector { features, coef });
        }
        machines.push(BinaryModel { kernel, c, support, positive_class, negative_class });
    }
    for (n, rest) in lines.inner.by_ref() {
        if !rest.trim().is_empty() {
            return Err(Error::model(n + 1, "unexpected content after the last machine"));
        }
    }
    OvoModel::new(classes, machines).map_err(|e| lines.err(e.to_string()))
}
