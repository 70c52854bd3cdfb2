//! Holds the `acceptance` test target, which checks the library against its
//! acceptance criteria and prints one PASS/FAIL line per criterion. Run it
//! with `cargo test -p optomech-validation --test acceptance`.
