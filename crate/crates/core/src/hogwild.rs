//! Lock-free shared parameters for asynchronous SGD.
//!
//! Workers update the same matrices without synchronization; occasional lost
//! or torn updates are tolerated by the algorithm (sparse, small steps), as
//! in the usual Hogwild scheme. Determinism is only guaranteed with a single
//! worker.

use std::cell::UnsafeCell;
use std::sync::Arc;

/// Shared mutable cell handed to every training worker.
pub struct Hogwild<T>(Arc<UnsafeCell<T>>);

unsafe impl<T: Send> Send for Hogwild<T> {}
unsafe impl<T: Send> Sync for Hogwild<T> {}

impl<T> Hogwild<T> {
    pub fn new(value: T) -> Self {
        Hogwild(Arc::new(UnsafeCell::new(value)))
    }

    /// Unsynchronized mutable access; data races between workers are accepted
    /// by design.
    #[allow(clippy::mut_from_ref)]
    pub fn get_mut(&self) -> &mut T {
        unsafe { &mut *self.0.get() }
    }

    /// Recover the inner value once all workers have finished.
    pub fn into_inner(self) -> T {
        match Arc::try_unwrap(self.0) {
            Ok(cell) => cell.into_inner(),
            Err(_) => panic!("worker handles still alive"),
        }
    }
}

impl<T> Clone for Hogwild<T> {
    fn clone(&self) -> Self {
        Hogwild(self.0.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::thread;

    #[test]
    fn shares_updates_across_clones() {
        let h = Hogwild::new(vec![0u64; 4]);
        let h2 = h.clone();
        h.get_mut()[1] = 5;
        assert_eq!(h2.get_mut()[1], 5);
        drop(h2);
        assert_eq!(h.into_inner(), vec![0, 5, 0, 0]);
    }

    #[test]
    fn workers_touching_disjoint_rows_lose_nothing() {
        let h = Hogwild::new(vec![0u64; 8]);
        let handles: Vec<_> = (0..4)
            .map(|w| {
                let h = h.clone();
                thread::spawn(move || {
                    for _ in 0..1000 {
                        h.get_mut()[2 * w] += 1;
                        h.get_mut()[2 * w + 1] += 2;
                    }
                })
            })
            .collect();
        for handle in handles {
            handle.join().unwrap();
        }
        assert_eq!(
            h.into_inner(),
            vec![1000, 2000, 1000, 2000, 1000, 2000, 1000, 2000]
        );
    }
}
