//! Transition memory index: exact threshold nearest-neighbour search over
//! transition features.
//!
//! Features live in one contiguous row-major buffer; a query is a flat scan
//! computing plain Euclidean distance to every row. Ties on distance go to
//! the smallest id. Ids are issued consecutively from 1, so row `i` always
//! holds id `i + 1`.
//!
//! # Dump format
//!
//! All integers and floats little-endian:
//!
//! ```text
//! u64 dimension
//! u64 count
//! count × { f64 × dimension, u64 id }
//! ```

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::types::{SetId, TransitionFeature};

/// Rows per work unit in the parallel scan.
#[cfg(feature = "parallel")]
const SCAN_CHUNK_ROWS: usize = 512;
/// Below this many stored floats the scan stays sequential.
#[cfg(feature = "parallel")]
const PARALLEL_MIN_FLOATS: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nearest {
    pub id: SetId,
    pub distance: f64,
}

#[derive(Debug, Clone)]
pub struct TransitionMemoryIndex {
    dimension: usize,
    data: Vec<f64>,
}

impl TransitionMemoryIndex {
    pub fn new(dimension: usize) -> Self {
        TransitionMemoryIndex {
            dimension,
            data: Vec::new(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.dimension).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn next_id(&self) -> SetId {
        SetId(self.len() as u64 + 1)
    }

    pub fn feature(&self, id: SetId) -> Option<&[f64]> {
        if id.is_none() || id.0 as usize > self.len() {
            return None;
        }
        let row = id.0 as usize - 1;
        Some(&self.data[row * self.dimension..(row + 1) * self.dimension])
    }

    fn check(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.dimension {
            return Err(Error::Dimension {
                expected: self.dimension,
                got: q.len(),
            });
        }
        Ok(())
    }

    /// Returns the id of the closest stored feature when its distance is at
    /// most `delta`, otherwise [`SetId::NONE`].
    pub fn get_index(&self, q: &TransitionFeature, delta: f64) -> Result<SetId> {
        self.check(q.as_slice())?;
        Ok(match self.nearest(q.as_slice()) {
            Some(n) if n.distance <= delta => n.id,
            _ => SetId::NONE,
        })
    }

    /// Appends `q` and returns its freshly issued id.
    pub fn update_index(&mut self, q: &TransitionFeature) -> Result<SetId> {
        self.check(q.as_slice())?;
        self.data.extend_from_slice(q.as_slice());
        Ok(SetId(self.len() as u64))
    }

    /// Nearest stored feature, dispatching to the parallel scan for large
    /// indexes when the `parallel` feature is enabled.
    pub fn nearest(&self, q: &[f64]) -> Option<Nearest> {
        #[cfg(feature = "parallel")]
        if self.data.len() >= PARALLEL_MIN_FLOATS {
            return self.nearest_par(q);
        }
        self.nearest_seq(q)
    }

    pub fn nearest_seq(&self, q: &[f64]) -> Option<Nearest> {
        if self.is_empty() {
            return None;
        }
        let best = scan_rows(&self.data, self.dimension, q, 0);
        Some(best.into_nearest())
    }

    #[cfg(feature = "parallel")]
    pub fn nearest_par(&self, q: &[f64]) -> Option<Nearest> {
        use rayon::prelude::*;

        if self.is_empty() {
            return None;
        }
        let dim = self.dimension;
        let partial: Vec<Best> = self
            .data
            .par_chunks(SCAN_CHUNK_ROWS * dim)
            .enumerate()
            .map(|(c, chunk)| scan_rows(chunk, dim, q, c * SCAN_CHUNK_ROWS))
            .collect();
        // chunks are in row order, so a strict `<` keeps the smallest id on ties
        let mut best = partial[0];
        for b in &partial[1..] {
            if b.distance < best.distance {
                best = *b;
            }
        }
        Some(best.into_nearest())
    }

    pub fn dump<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.dimension as u64).to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        for (row, chunk) in self.data.chunks(self.dimension.max(1)).enumerate() {
            for v in chunk {
                w.write_all(&v.to_le_bytes())?;
            }
            w.write_all(&(row as u64 + 1).to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load<R: Read>(mut r: R) -> Result<Self> {
        let dimension = read_u64(&mut r)? as usize;
        let count = read_u64(&mut r)? as usize;
        let mut data = Vec::with_capacity(dimension.saturating_mul(count));
        for row in 0..count {
            for _ in 0..dimension {
                data.push(f64::from_le_bytes(read_array(&mut r)?));
            }
            let id = read_u64(&mut r)?;
            if id != row as u64 + 1 {
                return Err(Error::Format {
                    what: "index dump",
                    message: format!("record {row} has id {id}, expected {}", row + 1),
                });
            }
        }
        Ok(TransitionMemoryIndex { dimension, data })
    }
}

#[derive(Debug, Clone, Copy)]
struct Best {
    row: usize,
    distance: f64,
}

impl Best {
    fn into_nearest(self) -> Nearest {
        Nearest {
            id: SetId(self.row as u64 + 1),
            distance: self.distance,
        }
    }
}

fn scan_rows(rows: &[f64], dim: usize, q: &[f64], first_row: usize) -> Best {
    let mut best = Best {
        row: first_row,
        distance: f64::INFINITY,
    };
    for (i, row) in rows.chunks_exact(dim).enumerate() {
        let d = euclidean(row, q);
        if d < best.distance {
            best = Best {
                row: first_row + i,
                distance: d,
            };
        }
    }
    best
}

#[inline]
pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

fn read_array<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| Error::Format {
        what: "index dump",
        message: e.to_string(),
    })?;
    Ok(buf)
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    Ok(u64::from_le_bytes(read_array(r)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn f(v: &[f64]) -> TransitionFeature {
        TransitionFeature(v.to_vec())
    }

    #[test]
    fn empty_index_returns_sentinel() {
        let idx = TransitionMemoryIndex::new(2);
        assert_eq!(idx.get_index(&f(&[3.0, 4.0]), 100.0).unwrap(), SetId::NONE);
    }

    #[test]
    fn threshold_examples() {
        let mut idx = TransitionMemoryIndex::new(2);
        assert_eq!(idx.update_index(&f(&[0.0, 0.0])).unwrap(), SetId(1));
        assert_eq!(idx.get_index(&f(&[0.0, 0.0]), 0.0).unwrap(), SetId(1));
        assert_eq!(idx.get_index(&f(&[1.0, 0.0]), 1.5).unwrap(), SetId(1));
        assert_eq!(idx.get_index(&f(&[1.0, 0.0]), 0.0).unwrap(), SetId::NONE);
        // the threshold is on plain distance: ‖(3,4)‖ = 5, squared would be 25
        assert_eq!(idx.get_index(&f(&[3.0, 4.0]), 5.0).unwrap(), SetId(1));
        assert_eq!(idx.get_index(&f(&[3.0, 4.0]), 4.99).unwrap(), SetId::NONE);
    }

    #[test]
    fn ids_are_consecutive_and_duplicates_get_new_ids() {
        let mut idx = TransitionMemoryIndex::new(1);
        assert_eq!(idx.update_index(&f(&[1.0])).unwrap(), SetId(1));
        assert_eq!(idx.update_index(&f(&[2.0])).unwrap(), SetId(2));
        assert_eq!(idx.update_index(&f(&[2.0])).unwrap(), SetId(3));
        assert_eq!(idx.next_id(), SetId(4));
        // tie between ids 2 and 3 goes to the smaller
        assert_eq!(idx.get_index(&f(&[2.0]), 0.0).unwrap(), SetId(2));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mut idx = TransitionMemoryIndex::new(3);
        assert!(matches!(
            idx.update_index(&f(&[1.0])),
            Err(Error::Dimension { expected: 3, got: 1 })
        ));
        assert!(matches!(
            idx.get_index(&f(&[1.0, 2.0]), 0.0),
            Err(Error::Dimension { expected: 3, got: 2 })
        ));
        assert!(idx.is_empty());
    }

    #[test]
    fn dump_and_load() {
        let mut idx = TransitionMemoryIndex::new(3);
        for i in 0..10 {
            idx.update_index(&f(&[i as f64, -0.5 * i as f64, 1e-3])).unwrap();
        }
        let mut buf = Vec::new();
        idx.dump(&mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 10 * (3 * 8 + 8));
        let back = TransitionMemoryIndex::load(buf.as_slice()).unwrap();
        assert_eq!(back.data, idx.data);
        assert_eq!(back.next_id(), SetId(11));

        buf.truncate(buf.len() - 3);
        assert!(TransitionMemoryIndex::load(buf.as_slice()).is_err());
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_scan_agrees_with_sequential() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let dim = 16;
        let mut idx = TransitionMemoryIndex::new(dim);
        for _ in 0..5000 {
            let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            idx.update_index(&f(&v)).unwrap();
        }
        // plant a duplicate so ties are exercised across chunk boundaries
        let dup = idx.feature(SetId(10)).unwrap().to_vec();
        idx.update_index(&f(&dup)).unwrap();
        for _ in 0..50 {
            let q: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            assert_eq!(idx.nearest_seq(&q), idx.nearest_par(&q));
        }
        assert_eq!(idx.nearest_par(&dup).unwrap().id, SetId(10));
    }

    proptest! {
        #[test]
        fn zero_threshold_hits_iff_exact_member(
            rows in prop::collection::vec(prop::collection::vec(-2i8..=2, 3), 0..30),
            q in prop::collection::vec(-2i8..=2, 3),
        ) {
            let mut idx = TransitionMemoryIndex::new(3);
            let as_f = |v: &Vec<i8>| v.iter().map(|&x| x as f64).collect::<Vec<_>>();
            for r in &rows {
                idx.update_index(&f(&as_f(r))).unwrap();
            }
            let hit = idx.get_index(&f(&as_f(&q)), 0.0).unwrap();
            prop_assert_eq!(!hit.is_none(), rows.contains(&q));
            if !hit.is_none() {
                let first = rows.iter().position(|r| *r == q).unwrap();
                prop_assert_eq!(hit, SetId(first as u64 + 1));
            }
        }

        #[test]
        fn hits_are_monotone_in_threshold(
            rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 1..20),
            q in prop::collection::vec(-5.0f64..5.0, 2),
            d1 in 0.0f64..5.0,
            extra in 0.0f64..5.0,
        ) {
            let mut idx = TransitionMemoryIndex::new(2);
            for r in &rows {
                idx.update_index(&f(r)).unwrap();
            }
            let a = idx.get_index(&f(&q), d1).unwrap();
            let b = idx.get_index(&f(&q), d1 + extra).unwrap();
            if !a.is_none() {
                prop_assert_eq!(a, b);
            }
        }
    }
}
