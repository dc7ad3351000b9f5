use std::thread;

use super::{MergeReduceStream, ScatterCoreset};
use crate::{Error, Result};

/// What one simulated machine contributed.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkerReport {
    pub chunks: usize,
    pub sample_count: u64,
    /// Scalars in the coreset message sent to the main server.
    pub scalars_sent: usize,
    /// `8 * scalars_sent` plus 8 bytes for the sample count.
    pub bytes_sent: usize,
}

#[derive(Debug, Clone)]
pub struct DistributedOutcome {
    pub coreset: ScatterCoreset,
    pub workers: Vec<WorkerReport>,
}

/// Deal `chunks` round-robin to `machines` workers, let each fold its own
/// merge-and-reduce tree on its own thread, then merge the worker roots.
///
/// Each worker ships its root coreset storage (`d² + d` scalars) and its
/// sample count, whatever number of chunks it absorbed.
pub fn simulate_distributed(chunks: &[ScatterCoreset], machines: usize) -> Result<DistributedOutcome> {
    if machines == 0 {
        return Err(Error::Spec("need at least one machine".into()));
    }
    let Some(first) = chunks.first() else {
        return Err(Error::EmptyInput("no chunks to distribute".into()));
    };
    let d = first.channels();
    if let Some(bad) = chunks.iter().find(|c| c.channels() != d) {
        return Err(Error::Dimension {
            context: "simulate_distributed",
            expected: d,
            found: bad.channels(),
        });
    }

    let roots: Vec<Result<(ScatterCoreset, usize)>> = thread::scope(|scope| {
        let handles: Vec<_> = (0..machines)
            .map(|m| {
                scope.spawn(move || {
                    let mut tree = MergeReduceStream::new(d)?;
                    let mut n = 0;
                    for chunk in chunks.iter().skip(m).step_by(machines) {
                        tree.push(chunk.clone())?;
                        n += 1;
                    }
                    Ok((tree.root(), n))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker thread panicked"))
            .collect()
    });

    let mut workers = Vec::with_capacity(machines);
    let mut coreset = ScatterCoreset::new(d)?;
    for root in roots {
        let (root, n) = root?;
        let scalars = root.resident_scalars();
        workers.push(WorkerReport {
            chunks: n,
            sample_count: root.sample_count(),
            scalars_sent: scalars,
            bytes_sent: 8 * scalars + 8,
        });
        coreset = coreset.merge(&root)?;
    }
    Ok(DistributedOutcome { coreset, workers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rel_frobenius;
    use nalgebra::DMatrix;

    fn chunks(n: usize, d: usize) -> Vec<ScatterCoreset> {
        (0..n)
            .map(|i| {
                let x = DMatrix::from_fn(d, 3, |r, c| (((i * 31 + r * 7 + c * 3) % 17) as f64 - 8.0) / 3.0);
                ScatterCoreset::from_samples(x.as_view()).unwrap()
            })
            .collect()
    }

    #[test]
    fn one_machine_equals_fold() {
        let cs = chunks(20, 4);
        let fold = ScatterCoreset::merge_all(&cs).unwrap();
        let out = simulate_distributed(&cs, 1).unwrap();
        assert!(rel_frobenius(&out.coreset.scatter(), &fold.scatter()) <= 1e-12);
        assert_eq!(out.workers.len(), 1);
        assert_eq!(out.workers[0].chunks, 20);
    }

    #[test]
    fn more_machines_than_chunks() {
        let cs = chunks(3, 2);
        let out = simulate_distributed(&cs, 5).unwrap();
        assert_eq!(out.workers.iter().map(|w| w.chunks).sum::<usize>(), 3);
        assert!(out.workers.iter().all(|w| w.bytes_sent == 8 * 6 + 8));
        assert_eq!(out.coreset.sample_count(), 9);
    }

    #[test]
    fn errors() {
        assert!(simulate_distributed(&[], 2).is_err());
        assert!(simulate_distributed(&chunks(2, 2), 0).is_err());
        let mut mixed = chunks(2, 2);
        mixed.push(ScatterCoreset::new(3).unwrap());
        assert!(matches!(simulate_distributed(&mixed, 2), Err(Error::Dimension { .. })));
    }
}
