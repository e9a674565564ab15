//! Placeholder lib; this package exists for its criterion benches.
