use std::fmt::Write as _;

use crate::{Coalition, GameError, Result, MAX_STORED_AGENTS, TOLERANCE};

/// A transferable-utility game `⟨N, v⟩` stored as a dense table indexed by
/// coalition bitmask.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicGame {
    n: usize,
    values: Vec<f64>,
}

/// One payoff per agent.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffVector(Vec<f64>);

impl PayoffVector {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(GameError::InvalidGame(format!("payoff {i} is not finite")));
        }
        Ok(Self(x))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `x(C)`: total payoff of a coalition's members.
    pub fn coalition_total(&self, c: Coalition) -> f64 {
        c.members().map(|i| self.0[i]).sum()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for PayoffVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl CharacteristicGame {
    /// Builds a game from a table of `2^n` values indexed by bitmask.
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(GameError::InvalidGame("agent count must be at least 1".into()));
        }
        if n > MAX_STORED_AGENTS {
            return Err(GameError::Capacity {
                op: "CharacteristicGame",
                limit: MAX_STORED_AGENTS,
                n,
            });
        }
        if values.len() != 1 << n {
            return Err(GameError::InvalidGame(format!(
                "expected {} coalition values, got {}",
                1usize << n,
                values.len()
            )));
        }
        if let Some(c) = values.iter().position(|v| !v.is_finite()) {
            return Err(GameError::InvalidGame(format!(
                "value of coalition {} is not finite",
                Coalition(c as u32)
            )));
        }
        if values[0].abs() > TOLERANCE {
            return Err(GameError::InvalidGame(format!(
                "v(empty) must be 0, got {}",
                values[0]
            )));
        }
        let mut values = values;
        values[0] = 0.0;
        Ok(Self { n, values })
    }

    /// Tabulates `f` over every coalition. `f(∅)` is ignored and forced to 0.
    pub fn from_fn<F: FnMut(Coalition) -> f64>(n: usize, mut f: F) -> Result<Self> {
        if n > MAX_STORED_AGENTS {
            return Err(GameError::Capacity {
                op: "CharacteristicGame",
                limit: MAX_STORED_AGENTS,
                n,
            });
        }
        let values = (0..1u32 << n)
            .map(|c| if c == 0 { 0.0 } else { f(Coalition(c)) })
            .collect();
        Self::new(n, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn value(&self, c: Coalition) -> f64 {
        self.values[c.index()]
    }

    pub fn grand_value(&self) -> f64 {
        self.values[Coalition::full(self.n).index()]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grand_coalition(&self) -> Coalition {
        Coalition::full(self.n)
    }

    pub(crate) fn check_agent(&self, agent: usize) -> Result<()> {
        if agent >= self.n {
            Err(GameError::AgentOutOfRange { agent, n: self.n })
        } else {
            Ok(())
        }
    }

    pub(crate) fn check_capacity(&self, op: &'static str, limit: usize) -> Result<()> {
        if self.n > limit {
            Err(GameError::Capacity { op, limit, n: self.n })
        } else {
            Ok(())
        }
    }

    /// Parses the text format: first line `n`, then one `bitmask value` pair
    /// per line covering every coalition exactly once. Blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());

        let (first, header) = lines.next().ok_or(GameError::Parse {
            line: 1,
            msg: "missing agent count".into(),
        })?;
        let n: usize = header.parse().map_err(|_| GameError::Parse {
            line: first,
            msg: format!("bad agent count {header:?}"),
        })?;
        if n == 0 || n > MAX_STORED_AGENTS {
            return Err(GameError::Parse {
                line: first,
                msg: format!("agent count must be in 1..={MAX_STORED_AGENTS}"),
            });
        }

        let mut values = vec![f64::NAN; 1 << n];
        let mut seen = vec![false; 1 << n];
        for (line, l) in lines {
            let mut parts = l.split_whitespace();
            let (Some(mask), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(GameError::Parse {
                    line,
                    msg: "expected `bitmask value`".into(),
                });
            };
            let mask: usize = mask.parse().map_err(|_| GameError::Parse {
                line,
                msg: format!("bad bitmask {mask:?}"),
            })?;
            let value: f64 = value.parse().map_err(|_| GameError::Parse {
                line,
                msg: format!("bad value {value:?}"),
            })?;
            if mask >= 1 << n {
                return Err(GameError::Parse {
                    line,
                    msg: format!("bitmask {mask} exceeds {n} agents"),
                });
            }
            if std::mem::replace(&mut seen[mask], true) {
                return Err(GameError::Parse {
                    line,
                    msg: format!("duplicate bitmask {mask}"),
                });
            }
            values[mask] = value;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(GameError::InvalidGame(format!(
                "no value for coalition bitmask {missing}"
            )));
        }
        Self::new(n, values)
    }

    /// Writes the text format accepted by [`CharacteristicGame::parse`],
    /// sorted by bitmask. Values use shortest round-trip formatting.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for (mask, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{mask} {v}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonzero_empty_value() {
        let err = CharacteristicGame::new(1, vec![1.0, 2.0]).unwrap_err();
        assert!(matches!(err, GameError::InvalidGame(_)));
    }

    #[test]
    fn rejects_non_finite_values() {
        assert!(CharacteristicGame::new(1, vec![0.0, f64::INFINITY]).is_err());
        assert!(CharacteristicGame::new(2, vec![0.0, 1.0, f64::NAN, 2.0]).is_err());
    }

    #[test]
    fn rejects_wrong_table_size() {
        assert!(CharacteristicGame::new(2, vec![0.0, 1.0, 2.0]).is_err());
    }

    #[test]
    fn text_round_trip() {
        let g = CharacteristicGame::from_fn(3, |c| c.len() as f64 * 0.1 + c.bits() as f64 / 7.0)
            .unwrap();
        let text = g.to_text();
        assert!(text.starts_with("3\n0 0\n1 "));
        assert_eq!(CharacteristicGame::parse(&text).unwrap(), g);
    }

    #[test]
    fn parse_accepts_any_line_order() {
        let g = CharacteristicGame::parse("2\n3 5\n1 1\n\n0 0\n2 2.5\n").unwrap();
        assert_eq!(g.values(), &[0.0, 1.0, 2.5, 5.0]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = CharacteristicGame::parse("2\n0 0\n1 x\n").unwrap_err();
        assert_eq!(
            err,
            GameError::Parse {
                line: 3,
                msg: "bad value \"x\"".into()
            }
        );
        assert!(matches!(
            CharacteristicGame::parse("2\n0 0\n1 1\n1 2\n3 3\n"),
            Err(GameError::Parse { line: 4, .. })
        ));
        assert!(matches!(
            CharacteristicGame::parse("2\n0 0\n1 1\n3 3\n"),
            Err(GameError::InvalidGame(_))
        ));
        assert!(matches!(
            CharacteristicGame::parse("1\n0 0\n2 1\n"),
            Err(GameError::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn payoff_totals() {
        let x = PayoffVector::new(vec![1.0, 2.0, 4.0]).unwrap();
        assert_eq!(x.coalition_total(Coalition(0b101)), 5.0);
        assert_eq!(x.total(), 7.0);
        assert!(PayoffVector::new(vec![f64::NAN]).is_err());
    }
}
