//! LRU cache of `k~` columns restricted to a row set.
//!
//! A column for row `i` stores `k~(i, j)` for the sorted row set it was last
//! requested with (normally the current core set). A request whose row set
//! is covered by the stored column is a hit; otherwise only the missing
//! entries are evaluated and the column is replaced by one covering exactly
//! the requested rows. Cached values come from the same evaluation routine
//! as direct ones, so they are bit-identical.

use alloc::vec::Vec;

use crate::kernel::TildeKernel;

/// Bytes charged per cached value: the `f64` and its row index.
pub const BYTES_PER_VALUE: usize = core::mem::size_of::<f64>() + core::mem::size_of::<usize>();

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
    pub kernel_evals: u64,
}

const NIL: usize = usize::MAX;

#[derive(Debug)]
struct Column {
    rows: Vec<usize>,
    values: Vec<f64>,
}

/// Per-row slot; resident slots form a doubly linked recency list.
#[derive(Debug)]
struct Slot {
    column: Option<Column>,
    prev: usize,
    next: usize,
}

#[derive(Debug)]
pub struct KernelCache {
    capacity_bytes: usize,
    resident_bytes: usize,
    resident: usize,
    slots: Vec<Slot>,
    /// Least recently used resident row.
    head: usize,
    /// Most recently used resident row.
    tail: usize,
    stats: CacheStats,
}

impl KernelCache {
    pub fn new(capacity_bytes: usize) -> Self {
        Self {
            capacity_bytes,
            resident_bytes: 0,
            resident: 0,
            slots: Vec::new(),
            head: NIL,
            tail: NIL,
            stats: CacheStats::default(),
        }
    }

    pub fn capacity_bytes(&self) -> usize {
        self.capacity_bytes
    }

    pub fn resident_bytes(&self) -> usize {
        self.resident_bytes
    }

    pub fn stats(&self) -> CacheStats {
        self.stats
    }

    /// Number of resident columns.
    pub fn len(&self) -> usize {
        self.resident
    }

    pub fn is_empty(&self) -> bool {
        self.resident == 0
    }

    pub fn clear(&mut self) {
        self.slots.clear();
        self.head = NIL;
        self.tail = NIL;
        self.resident = 0;
        self.resident_bytes = 0;
    }

    /// Writes `k~(i, j)` for every `j` in `active` (sorted ascending) into `out`.
    pub fn get_column(&mut self, tk: &TildeKernel<'_>, i: usize, active: &[usize], out: &mut Vec<f64>) {
        debug_assert!(active.windows(2).all(|w| w[0] < w[1]), "active rows must be sorted");
        out.clear();
        out.reserve(active.len());

        let mut evals = 0u64;
        match self.slots.get(i).and_then(|s| s.column.as_ref()) {
            Some(col) if col.rows == active => out.extend_from_slice(&col.values),
            Some(col) => {
                let mut p = 0;
                for &j in active {
                    while p < col.rows.len() && col.rows[p] < j {
                        p += 1;
                    }
                    if p < col.rows.len() && col.rows[p] == j {
                        out.push(col.values[p]);
                    } else {
                        out.push(tk.entry(i, j));
                        evals += 1;
                    }
                }
            }
            None => {
                out.extend(active.iter().map(|&j| tk.entry(i, j)));
                evals = active.len() as u64;
            }
        }
        self.stats.kernel_evals += evals;

        if evals == 0 && self.is_resident(i) {
            self.stats.hits += 1;
            self.unlink(i);
            self.push_back(i);
            return;
        }
        self.stats.misses += 1;
        self.store(i, active, out);
    }

    fn is_resident(&self, i: usize) -> bool {
        self.slots.get(i).is_some_and(|s| s.column.is_some())
    }

    fn unlink(&mut self, i: usize) {
        let (prev, next) = (self.slots[i].prev, self.slots[i].next);
        if prev == NIL {
            self.head = next;
        } else {
            self.slots[prev].next = next;
        }
        if next == NIL {
            self.tail = prev;
        } else {
            self.slots[next].prev = prev;
        }
    }

    fn push_back(&mut self, i: usize) {
        self.slots[i].prev = self.tail;
        self.slots[i].next = NIL;
        if self.tail == NIL {
            self.head = i;
        } else {
            self.slots[self.tail].next = i;
        }
        self.tail = i;
    }

    fn remove(&mut self, i: usize) {
        if let Some(col) = self.slots.get_mut(i).and_then(|s| s.column.take()) {
            self.unlink(i);
            self.resident -= 1;
            self.resident_bytes -= col.rows.len() * BYTES_PER_VALUE;
        }
    }

    fn store(&mut self, i: usize, rows: &[usize], values: &[f64]) {
        self.remove(i);
        let bytes = rows.len() * BYTES_PER_VALUE;
        if bytes > self.capacity_bytes {
            return;
        }
        while self.resident_bytes + bytes > self.capacity_bytes && self.head != NIL {
            self.remove(self.head);
        }
        if self.slots.len() <= i {
            self.slots.resize_with(i + 1, || Slot { column: None, prev: NIL, next: NIL });
        }
        self.slots[i].column = Some(Column { rows: rows.to_vec(), values: values.to_vec() });
        self.push_back(i);
        self.resident += 1;
        self.resident_bytes += bytes;
    }
}
