//! Holds the `acceptance` test target: `cargo test -p spinbath-validation --test acceptance`.
