//! Example systems embedded in the binary so they run from any directory.

/// One embedded example: its lookup name and its configuration text.
pub struct BuiltinExample {
    pub name: &'static str,
    pub summary: &'static str,
    pub text: &'static str,
}

pub const BUILTINS: [BuiltinExample; 3] = [
    BuiltinExample {
        name: "oscillator",
        summary: "damped harmonic oscillator forced by a smooth pulse",
        text: include_str!("../../configs/oscillator.toml"),
    },
    BuiltinExample {
        name: "kepler",
        summary: "central force with time-dependent mass and friction",
        text: include_str!("../../configs/kepler.toml"),
    },
    BuiltinExample {
        name: "pendulum",
        summary: "variable-length pendulum constrained through a multiplier",
        text: include_str!("../../configs/pendulum.toml"),
    },
];

pub fn builtin(name: &str) -> Option<&'static BuiltinExample> {
    BUILTINS.iter().find(|b| b.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_finds_each_embedded_example() {
        for name in ["oscillator", "kepler", "pendulum"] {
            let b = builtin(name).unwrap();
            assert!(b.text.contains("[system]"));
        }
        assert!(builtin("unknown").is_none());
    }
}
