//! Null-control synthesis.
