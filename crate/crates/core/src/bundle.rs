//! Named oracle systems.

use crate::affine::{DiagonalIFS, IfsSpec, MapSpec};
use crate::error::{Error, Result};

pub struct Bundled {
    pub name: &'static str,
    pub description: &'static str,
    maps: &'static [(&'static str, &'static str, [&'static str; 2])],
    weights: &'static [&'static str],
}

impl Bundled {
    pub fn spec(&self) -> IfsSpec {
        IfsSpec {
            maps: self
                .maps
                .iter()
                .map(|(l1, l2, a)| MapSpec { l1: l1.to_string(), l2: l2.to_string(), a: [a[0].to_string(), a[1].to_string()] })
                .collect(),
            weights: self.weights.iter().map(|w| w.to_string()).collect(),
        }
    }

    pub fn ifs(&self) -> DiagonalIFS {
        DiagonalIFS::from_strs(self.maps, self.weights).expect("bundled systems are valid")
    }
}

const Q4: &[&str] = &["1/4", "1/4", "1/4", "1/4"];
const Q3: &[&str] = &["1/3", "1/3", "1/3"];
const Q2: &[&str] = &["1/2", "1/2"];

pub const SYSTEMS: &[Bundled] = &[
    Bundled {
        name: "selfsim2",
        description: "four maps with λ ≡ 1/2 tiling the unit square; μ is Lebesgue",
        maps: &[("1/2", "1/2", ["0", "0"]), ("1/2", "1/2", ["1/2", "0"]), ("1/2", "1/2", ["0", "1/2"]), ("1/2", "1/2", ["1/2", "1/2"])],
        weights: Q4,
    },
    Bundled {
        name: "bm3",
        description: "Bedford-McMullen carpet: x/3 with offsets 0, 1/3, 2/3 and y/2 with offsets 0, 0, 1/2; dim ≈ 1.339",
        maps: &[("1/3", "1/2", ["0", "0"]), ("1/3", "1/2", ["1/3", "0"]), ("1/3", "1/2", ["2/3", "1/2"])],
        weights: Q3,
    },
    Bundled {
        name: "column",
        description: "fixed points on the line x = 0: π_xμ is a point mass, slices are the Cantor measure",
        maps: &[("1/2", "1/3", ["0", "0"]), ("1/2", "1/3", ["0", "2/3"])],
        weights: Q2,
    },
    Bundled {
        name: "graph",
        description: "x-digits determine the symbols: μ lives on a graph over Lebesgue and slices are point masses",
        maps: &[("1/2", "1/3", ["0", "0"]), ("1/2", "1/3", ["1/2", "2/3"])],
        weights: Q2,
    },
    Bundled {
        name: "ratlock",
        description: "all ratios powers of 1/2: the irrationality condition fails and time-1 maps lock",
        maps: &[("1/2", "1/2", ["0", "0"]), ("1/2", "1/4", ["1/2", "0"])],
        weights: Q2,
    },
    Bundled {
        name: "eqlyap",
        description: "λ₁ = (1/2, 1/4), λ₂ = (1/4, 1/2): equal Lyapunov exponents",
        maps: &[("1/2", "1/4", ["0", "0"]), ("1/4", "1/2", ["1/2", "1/2"])],
        weights: Q2,
    },
    Bundled {
        name: "product",
        description: "two x-digits at 1/2 times two y-digits at 1/3: μ = Lebesgue × Cantor",
        maps: &[("1/2", "1/3", ["0", "0"]), ("1/2", "1/3", ["1/2", "0"]), ("1/2", "1/3", ["0", "2/3"]), ("1/2", "1/3", ["1/2", "2/3"])],
        weights: Q4,
    },
    Bundled {
        name: "mixed",
        description: "vertical ratios 1/2 and 1/3 over λ₁ ≡ 1/2: the suspension flow is not locked",
        maps: &[("1/2", "1/2", ["0", "0"]), ("1/2", "1/3", ["1/2", "0"])],
        weights: Q2,
    },
    Bundled {
        name: "dependent",
        description: "ratios 2/3 and 4/9, multiplicatively dependent: the irrationality condition fails",
        maps: &[("2/3", "4/9", ["0", "0"]), ("2/3", "4/9", ["1/3", "5/9"])],
        weights: Q2,
    },
    Bundled {
        name: "lebesgue",
        description: "x-marginal is Lebesgue on [0, 1); y ≡ 0",
        maps: &[("1/2", "1/2", ["0", "0"]), ("1/2", "1/2", ["1/2", "0"])],
        weights: Q2,
    },
    Bundled {
        name: "cantor",
        description: "x-marginal is the middle-thirds Cantor measure; y ≡ 0",
        maps: &[("1/3", "1/2", ["0", "0"]), ("1/3", "1/2", ["2/3", "0"])],
        weights: Q2,
    },
];

pub fn find(name: &str) -> Result<&'static Bundled> {
    SYSTEMS
        .iter()
        .find(|b| b.name == name)
        .ok_or_else(|| Error::Parse(format!("unknown bundled system {name:?}")))
}

pub fn get(name: &str) -> Result<DiagonalIFS> {
    Ok(find(name)?.ifs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::{irrationality_condition, lyapunov, validate, Regime};

    #[test]
    fn registry() {
        assert!(SYSTEMS.len() >= 6);
        for b in SYSTEMS {
            assert!(validate(&b.spec()).is_ok(), "{}", b.name);
            assert_eq!(b.spec().build().unwrap(), b.ifs());
        }
        let sat = |n: &str| irrationality_condition(&get(n).unwrap()).unwrap().is_satisfied();
        assert!(!sat("ratlock") && !sat("dependent") && !sat("eqlyap"));
        assert!(sat("bm3") && sat("mixed") && sat("column"));
        assert_eq!(lyapunov(&get("eqlyap").unwrap()).regime, Regime::Equal);
        assert!(matches!(get("nope"), Err(Error::Parse(_))));
    }
}
