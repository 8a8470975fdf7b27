//! Acceptance criteria for `teesn`. The suite is the `acceptance` test
//! target: `cargo test -p teesn-verify --test acceptance`.
