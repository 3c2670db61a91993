//! Compile-time switch between rayon and plain iterators.
//!
//! With the `parallel` feature (on by default) this re-exports the rayon
//! prelude, so call sites write `into_par_iter()` and fan out across the
//! thread pool. Without it, a shim maps the same method name onto the
//! sequential iterator. Both paths produce identical results because every
//! parallel unit of work owns a derived RNG substream.

#[cfg(feature = "parallel")]
pub(crate) use rayon::prelude::*;

#[cfg(not(feature = "parallel"))]
mod shim {
    pub trait IntoParIter: IntoIterator + Sized {
        fn into_par_iter(self) -> Self::IntoIter {
            self.into_iter()
        }
    }

    impl<I: IntoIterator + Sized> IntoParIter for I {}
}

#[cfg(not(feature = "parallel"))]
pub(crate) use shim::IntoParIter;
