/// Runs independent pieces of work, possibly concurrently.
///
/// Implementations may schedule the items in any order and on any number of
/// threads; callers never let the result depend on that schedule. Every
/// numeric routine in this crate fixes its combine order from the input size
/// alone, so swapping executors changes wall time and nothing else.
pub trait Executor: Sync {
    /// Calls `f` once on every item.
    fn for_each<T, F>(&self, items: &mut [T], f: F)
    where
        T: Send,
        F: Fn(&mut T) + Sync + Send;

    /// Number of threads work is spread over.
    fn workers(&self) -> usize {
        1
    }
}

/// Runs everything on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Serial;

impl Executor for Serial {
    fn for_each<T, F>(&self, items: &mut [T], f: F)
    where
        T: Send,
        F: Fn(&mut T) + Sync + Send,
    {
        items.iter_mut().for_each(f);
    }
}
