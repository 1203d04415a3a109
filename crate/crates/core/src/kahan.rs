//! Compensated summation with a partition-independent parallel reduction.
//!
//! Terms are cut into fixed-size chunks (the chunk size never depends on the
//! thread count), each chunk is summed in order with Neumaier compensation,
//! and the chunk partials are merged in chunk order. The result is therefore
//! bit-identical whether rayon runs on one thread or many.

use rayon::prelude::*;

pub const CHUNK_LEN: usize = 4096;

/// Neumaier's variant of Kahan summation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub const fn new() -> Self {
        CompensatedSum { sum: 0.0, comp: 0.0 }
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for v in iter {
            s.add(v);
        }
        s
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

fn sum_chunk<T, const K: usize>(chunk: &[T], f: &(impl Fn(&T) -> [f64; K] + Sync)) -> [CompensatedSum; K] {
    let mut acc = [CompensatedSum::new(); K];
    for item in chunk {
        let terms = f(item);
        for (a, t) in acc.iter_mut().zip(terms) {
            a.add(t);
        }
    }
    acc
}

/// Sum `K` term streams over `items` in canonical order, in parallel, with a
/// result that does not depend on the rayon thread count.
pub fn deterministic_sum<T, F, const K: usize>(items: &[T], f: F) -> [f64; K]
where
    T: Sync,
    F: Fn(&T) -> [f64; K] + Sync,
{
    let partials: Vec<[CompensatedSum; K]> = items
        .par_chunks(CHUNK_LEN)
        .map(|chunk| sum_chunk(chunk, &f))
        .collect();
    let mut total = [CompensatedSum::new(); K];
    for p in &partials {
        for (t, c) in total.iter_mut().zip(p) {
            t.merge(c);
        }
    }
    total.map(|s| s.value())
}

/// Serial reference of [`deterministic_sum`]: same chunking, same merge order.
pub fn deterministic_sum_serial<T, F, const K: usize>(items: &[T], f: F) -> [f64; K]
where
    T: Sync,
    F: Fn(&T) -> [f64; K] + Sync,
{
    let mut total = [CompensatedSum::new(); K];
    for chunk in items.chunks(CHUNK_LEN) {
        let p = sum_chunk(chunk, &f);
        for (t, c) in total.iter_mut().zip(&p) {
            t.merge(c);
        }
    }
    total.map(|s| s.value())
}
