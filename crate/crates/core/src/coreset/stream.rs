use super::ScatterCoreset;
use crate::{Error, Result};

/// Insert-only merge-and-reduce tree over leaf coresets.
///
/// Level `i` holds at most one coreset summarising `2^i` leaves; a new leaf
/// carries upward like a binary increment, so at most `O(log n)` coresets
/// are alive after `n` leaves.
#[derive(Debug, Clone)]
pub struct MergeReduceStream {
    d: usize,
    levels: Vec<Option<ScatterCoreset>>,
    leaves: u64,
    merges: u64,
}

impl MergeReduceStream {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Spec("a coreset needs at least one channel".into()));
        }
        Ok(MergeReduceStream {
            d,
            levels: Vec::new(),
            leaves: 0,
            merges: 0,
        })
    }

    pub fn channels(&self) -> usize {
        self.d
    }

    pub fn leaves(&self) -> u64 {
        self.leaves
    }

    /// Pairwise merges performed so far.
    pub fn merges(&self) -> u64 {
        self.merges
    }

    /// Levels currently holding a coreset.
    pub fn occupied_levels(&self) -> usize {
        self.levels.iter().filter(|l| l.is_some()).count()
    }

    pub fn push(&mut self, leaf: ScatterCoreset) -> Result<()> {
        if leaf.channels() != self.d {
            return Err(Error::Dimension {
                context: "MergeReduceStream::push",
                expected: self.d,
                found: leaf.channels(),
            });
        }
        let mut carry = leaf;
        for slot in self.levels.iter_mut() {
            match slot.take() {
                None => {
                    *slot = Some(carry);
                    self.leaves += 1;
                    return Ok(());
                }
                Some(existing) => {
                    carry = existing.merge(&carry)?;
                    self.merges += 1;
                }
            }
        }
        self.levels.push(Some(carry));
        self.leaves += 1;
        Ok(())
    }

    /// Coreset of every leaf pushed so far.
    pub fn root(&self) -> ScatterCoreset {
        let live: Vec<&ScatterCoreset> = self.levels.iter().flatten().collect();
        if live.is_empty() {
            return ScatterCoreset::new(self.d).expect("d >= 1 checked at construction");
        }
        ScatterCoreset::merge_all(live).expect("levels share d")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rel_frobenius;
    use nalgebra::DMatrix;

    #[test]
    fn levels_stay_logarithmic() {
        let mut s = MergeReduceStream::new(3).unwrap();
        let mut fold = ScatterCoreset::new(3).unwrap();
        for i in 0..100u32 {
            let x = DMatrix::from_fn(3, 2, |r, c| ((i * 7 + r as u32 * 3 + c as u32) % 11) as f64 - 5.0);
            let leaf = ScatterCoreset::from_samples(x.as_view()).unwrap();
            fold = fold.merge(&leaf).unwrap();
            s.push(leaf).unwrap();
            assert!(s.occupied_levels() as u32 <= 32 - (i + 1).leading_zeros());
        }
        assert_eq!(s.leaves(), 100);
        assert_eq!(s.root().sample_count(), 200);
        assert!(rel_frobenius(&s.root().scatter(), &fold.scatter()) <= 1e-10);
        assert!(s.push(ScatterCoreset::new(2).unwrap()).is_err());
    }
}
