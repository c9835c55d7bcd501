use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LayoutKind {
    TwoBoundary,
    InteriorBlock,
    ExtensionBlock,
}

impl LayoutKind {
    pub fn name(self) -> &'static str {
        match self {
            LayoutKind::TwoBoundary => "two-boundary",
            LayoutKind::InteriorBlock => "interior-block",
            LayoutKind::ExtensionBlock => "extension-block",
        }
    }
}

/// Request passed to [`ControlLayout::build`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LayoutSpec {
    TwoBoundary,
    /// Contiguous block of `len` agents starting at 1-based label `start`.
    InteriorBlock { start: usize, len: usize },
    /// Centered interior block holding the fraction `ratio` of the agents.
    InteriorFraction { ratio: f64 },
    ExtensionBlock,
}

impl std::str::FromStr for LayoutSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "two-boundary" | "two_boundary" | "boundary" => Ok(LayoutSpec::TwoBoundary),
            "extension-block" | "extension" => Ok(LayoutSpec::ExtensionBlock),
            _ => {
                // interior:<start>:<len> or interior:<ratio>
                let rest = s
                    .strip_prefix("interior-block:")
                    .or_else(|| s.strip_prefix("interior:"))
                    .ok_or_else(|| Error::Layout(format!("unknown layout '{s}'")))?;
                let parts: Vec<&str> = rest.split(':').collect();
                match parts.as_slice() {
                    [start, len] => Ok(LayoutSpec::InteriorBlock {
                        start: start
                            .parse()
                            .map_err(|_| Error::Layout(format!("bad block start '{start}'")))?,
                        len: len
                            .parse()
                            .map_err(|_| Error::Layout(format!("bad block length '{len}'")))?,
                    }),
                    [ratio] => Ok(LayoutSpec::InteriorFraction {
                        ratio: ratio
                            .parse()
                            .map_err(|_| Error::Layout(format!("bad block ratio '{ratio}'")))?,
                    }),
                    _ => Err(Error::Layout(format!("unknown layout '{s}'"))),
                }
            }
        }
    }
}

impl std::fmt::Display for LayoutSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LayoutSpec::TwoBoundary => write!(f, "two-boundary"),
            LayoutSpec::InteriorBlock { start, len } => write!(f, "interior:{start}:{len}"),
            LayoutSpec::InteriorFraction { ratio } => write!(f, "interior:{ratio}"),
            LayoutSpec::ExtensionBlock => write!(f, "extension-block"),
        }
    }
}

/// Which agents receive an independent control channel.
///
/// Agents carry integer labels. Ordinary chains are labelled `1..=n`; the
/// extended chain built for an `n`-agent network is labelled
/// `-h..=n+h` with `h = ceil(n/2)` (for even `n` this is the `2n+1` node
/// chain `-n/2..=n+n/2`; for odd `n` it has `2n+2` nodes). Storage row of
/// label `j` is `j - first_label`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlLayout {
    n_agents: usize,
    kind: LayoutKind,
    first_label: i64,
    active: Vec<i64>,
}

impl ControlLayout {
    pub fn build(n: usize, spec: &LayoutSpec) -> Result<Self> {
        match *spec {
            LayoutSpec::TwoBoundary => Self::two_boundary(n),
            LayoutSpec::InteriorBlock { start, len } => Self::interior_block(n, start, len),
            LayoutSpec::InteriorFraction { ratio } => Self::interior_fraction(n, ratio),
            LayoutSpec::ExtensionBlock => Self::extension(n),
        }
    }

    pub fn two_boundary(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Layout(format!(
                "two boundary controls need at least 2 agents, got {n}"
            )));
        }
        Ok(Self {
            n_agents: n,
            kind: LayoutKind::TwoBoundary,
            first_label: 1,
            active: vec![1, n as i64],
        })
    }

    /// Block of `len` agents with labels `start..start+len`, strictly inside
    /// `1..=n`.
    pub fn interior_block(n: usize, start: usize, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::Layout("interior block must be non-empty".into()));
        }
        if start < 2 || start + len > n {
            return Err(Error::Layout(format!(
                "block {start}..{} does not fit strictly inside 1..={n}",
                start + len - 1
            )));
        }
        Ok(Self {
            n_agents: n,
            kind: LayoutKind::InteriorBlock,
            first_label: 1,
            active: (start as i64..(start + len) as i64).collect(),
        })
    }

    /// Centered interior block with `M = max(1, round(ratio·n))` agents, so that
    /// `M/n` stays (nearly) constant across a sweep.
    pub fn interior_fraction(n: usize, ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::Layout(format!("block ratio must lie in (0,1), got {ratio}")));
        }
        let len = ((ratio * n as f64).round() as usize).max(1);
        if len + 2 > n {
            return Err(Error::Layout(format!(
                "a block of {len} agents does not fit strictly inside a chain of {n}"
            )));
        }
        let start = 2 + (n - 2 - len) / 2;
        Self::interior_block(n, start, len)
    }

    /// Control layout on the extended chain of an `n`-agent network: active on
    /// labels `-h+1..=0`, i.e. `h = ceil(n/2)` channels outside the original
    /// block `1..=n`.
    pub fn extension(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Layout(format!(
                "extension needs at least 2 original agents, got {n}"
            )));
        }
        let h = extension_half_width(n) as i64;
        Ok(Self {
            n_agents: n + 2 * h as usize + 1,
            kind: LayoutKind::ExtensionBlock,
            first_label: -h,
            active: (-h + 1..=0).collect(),
        })
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn kind(&self) -> LayoutKind {
        self.kind
    }

    pub fn n_channels(&self) -> usize {
        self.active.len()
    }

    pub fn first_label(&self) -> i64 {
        self.first_label
    }

    pub fn last_label(&self) -> i64 {
        self.first_label + self.n_agents as i64 - 1
    }

    /// Labels of the controlled agents, one per channel.
    pub fn active_labels(&self) -> &[i64] {
        &self.active
    }

    pub fn row_of_label(&self, label: i64) -> usize {
        (label - self.first_label) as usize
    }

    /// Zero-based storage rows of the controlled agents.
    pub fn rows(&self) -> Vec<usize> {
        self.active.iter().map(|&l| self.row_of_label(l)).collect()
    }

    /// `out += scale * B u`.
    pub fn add_scaled(&self, u: &[f64], scale: f64, out: &mut [f64]) {
        debug_assert_eq!(u.len(), self.active.len());
        for (c, &label) in self.active.iter().enumerate() {
            out[self.row_of_label(label)] += scale * u[c];
        }
    }

    /// `Bᵀ y`.
    pub fn transpose_apply(&self, y: &[f64]) -> Vec<f64> {
        self.active.iter().map(|&l| y[self.row_of_label(l)]).collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(self.n_agents, self.active.len());
        for (c, &label) in self.active.iter().enumerate() {
            b[(self.row_of_label(label), c)] = 1.0;
        }
        b
    }
}

/// Number of nodes added on the right of an `n`-agent network when extending
/// (the left side gets one more, the junction node 0).
pub fn extension_half_width(n: usize) -> usize {
    n.div_ceil(2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_boundary_five_agents() {
        let l = ControlLayout::build(5, &LayoutSpec::TwoBoundary).unwrap();
        assert_eq!(l.active_labels(), &[1, 5]);
        let b = l.to_dense();
        assert_eq!(b.shape(), (5, 2));
        assert_eq!(b[(0, 0)], 1.0);
        assert_eq!(b[(4, 1)], 1.0);
        assert_eq!(b.sum(), 2.0);
    }

    #[test]
    fn extension_of_four_agents() {
        let l = ControlLayout::build(4, &LayoutSpec::ExtensionBlock).unwrap();
        assert_eq!(l.n_agents(), 9);
        assert_eq!(l.first_label(), -2);
        assert_eq!(l.last_label(), 6);
        assert_eq!(l.active_labels(), &[-1, 0]);
        assert_eq!(l.rows(), vec![1, 2]);
        // all controlled agents fall outside the original block
        assert!(l.active_labels().iter().all(|&j| !(1..=4).contains(&j)));
    }

    #[test]
    fn extension_of_odd_chain() {
        let l = ControlLayout::extension(5).unwrap();
        // h = 3: labels -3..=8, 12 nodes, channels at -2, -1, 0
        assert_eq!(l.n_agents(), 12);
        assert_eq!(l.first_label(), -3);
        assert_eq!(l.last_label(), 8);
        assert_eq!(l.active_labels(), &[-2, -1, 0]);
    }

    #[test]
    fn degenerate_chain_rejected() {
        assert!(matches!(
            ControlLayout::build(1, &LayoutSpec::TwoBoundary),
            Err(Error::Layout(_))
        ));
    }

    #[test]
    fn interior_block_must_fit_strictly_inside() {
        assert!(ControlLayout::interior_block(6, 1, 2).is_err());
        assert!(ControlLayout::interior_block(6, 5, 2).is_err());
        assert!(ControlLayout::interior_block(6, 2, 0).is_err());
        let l = ControlLayout::interior_block(6, 3, 2).unwrap();
        assert_eq!(l.active_labels(), &[3, 4]);
    }

    #[test]
    fn interior_fraction_keeps_ratio() {
        for n in [8, 16, 24, 32, 48] {
            let l = ControlLayout::interior_fraction(n, 0.25).unwrap();
            assert_eq!(l.n_channels(), n / 4);
            let first = l.active_labels()[0];
            let last = *l.active_labels().last().unwrap();
            assert!(first >= 2 && last < n as i64);
        }
    }

    #[test]
    fn one_entry_per_column() {
        for spec in [
            LayoutSpec::TwoBoundary,
            LayoutSpec::InteriorBlock { start: 3, len: 3 },
            LayoutSpec::ExtensionBlock,
        ] {
            let l = ControlLayout::build(8, &spec).unwrap();
            let b = l.to_dense();
            for c in 0..b.ncols() {
                assert_eq!(b.column(c).sum(), 1.0);
                assert_eq!(b.column(c).iter().filter(|&&x| x != 0.0).count(), 1);
            }
        }
    }

    #[test]
    fn spec_parsing() {
        assert_eq!("two-boundary".parse::<LayoutSpec>().unwrap(), LayoutSpec::TwoBoundary);
        assert_eq!(
            "interior:3:2".parse::<LayoutSpec>().unwrap(),
            LayoutSpec::InteriorBlock { start: 3, len: 2 }
        );
        assert_eq!(
            "interior:0.25".parse::<LayoutSpec>().unwrap(),
            LayoutSpec::InteriorFraction { ratio: 0.25 }
        );
        assert!("nowhere".parse::<LayoutSpec>().is_err());
    }
}
