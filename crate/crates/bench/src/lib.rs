//! Placeholder library crate; see `benches/` for the criterion targets.
