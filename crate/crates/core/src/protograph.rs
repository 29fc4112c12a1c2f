//! Protomatrices, design constraints, puncturing and code-rate bookkeeping.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::hadamard::{HadamardOrder, Parity};

/// Base matrix `B` (m x n) of small non-negative multiplicities, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Protomatrix {
    m: usize,
    n: usize,
    entries: Vec<u32>,
}

impl Protomatrix {
    pub fn new(m: usize, n: usize, entries: Vec<u32>) -> Result<Self> {
        if entries.len() != m * n {
            return Err(Error::Shape(format!(
                "{} entries for a {m}x{n} protomatrix",
                entries.len()
            )));
        }
        Ok(Protomatrix { m, n, entries })
    }

    pub fn from_rows<R: AsRef<[u32]>>(rows: &[R]) -> Result<Self> {
        let n = rows.first().map_or(0, |r| r.as_ref().len());
        let mut entries = Vec::with_capacity(rows.len() * n);
        for (i, r) in rows.iter().enumerate() {
            if r.as_ref().len() != n {
                return Err(Error::Shape(format!(
                    "row {i} has {} entries, expected {n}",
                    r.as_ref().len()
                )));
            }
            entries.extend_from_slice(r.as_ref());
        }
        Self::new(rows.len(), n, entries)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn row_weight(&self, i: usize) -> usize {
        self.row(i).iter().map(|&b| b as usize).sum()
    }

    pub fn col_weight(&self, j: usize) -> usize {
        (0..self.m).map(|i| self.get(i, j) as usize).sum()
    }

    /// Common row weight `d`, if every row has the same weight.
    pub fn uniform_row_weight(&self) -> Option<usize> {
        if self.m == 0 {
            return None;
        }
        let d = self.row_weight(0);
        (0..self.m).all(|i| self.row_weight(i) == d).then_some(d)
    }

    /// Hadamard order `r = d - 2` of the uniform-row-weight family.
    pub fn hadamard_order(&self) -> Result<HadamardOrder> {
        let d = self
            .uniform_row_weight()
            .ok_or_else(|| Error::Shape("rows do not share a common weight".into()))?;
        HadamardOrder::from_row_weight(d)
    }
}

impl fmt::Display for Protomatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.m {
            for (j, b) in self.row(i).iter().enumerate() {
                if j > 0 {
                    f.write_str(" ")?;
                }
                write!(f, "{b}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Design constraints of the protomatrix search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Constraints {
    pub m: usize,
    pub n: usize,
    pub row_weight: usize,
    pub min_col_weight: usize,
    pub max_col_weight: usize,
    pub max_entry: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Dimensions { m: usize, n: usize },
    RowWeight { row: usize, weight: usize },
    ColWeight { col: usize, weight: usize },
    Entry { row: usize, col: usize, value: u32 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Dimensions { m, n } => write!(f, "dimensions {m}x{n} differ from the constraints"),
            Violation::RowWeight { row, weight } => write!(f, "row {row} has weight {weight}"),
            Violation::ColWeight { col, weight } => write!(f, "column {col} has weight {weight}"),
            Violation::Entry { row, col, value } => write!(f, "entry ({row}, {col}) = {value} too large"),
        }
    }
}

/// Checks every constraint and reports all violations with their location.
/// The dimension check is skipped when `constraints.m` or `.n` is zero.
pub fn validate(b: &Protomatrix, c: &Constraints) -> core::result::Result<(), Vec<Violation>> {
    let mut v = Vec::new();
    if (c.m != 0 && c.m != b.m) || (c.n != 0 && c.n != b.n) {
        v.push(Violation::Dimensions { m: b.m, n: b.n });
    }
    for row in 0..b.m {
        let weight = b.row_weight(row);
        if weight != c.row_weight {
            v.push(Violation::RowWeight { row, weight });
        }
    }
    for col in 0..b.n {
        let weight = b.col_weight(col);
        if weight < c.min_col_weight || weight > c.max_col_weight {
            v.push(Violation::ColWeight { col, weight });
        }
    }
    for row in 0..b.m {
        for col in 0..b.n {
            let value = b.get(row, col);
            if value > c.max_entry {
                v.push(Violation::Entry { row, col, value });
            }
        }
    }
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

/// Punctured protograph columns plus the number of punctured degree-1
/// Hadamard variable nodes per Hadamard check (odd order only).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct PunctureSpec {
    pvn_columns: Vec<usize>,
    d1h_per_hcn: usize,
}

impl PunctureSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(mut pvn_columns: Vec<usize>, d1h_per_hcn: usize) -> Self {
        pvn_columns.sort_unstable();
        pvn_columns.dedup();
        PunctureSpec { pvn_columns, d1h_per_hcn }
    }

    pub fn pvn_columns(&self) -> &[usize] {
        &self.pvn_columns
    }

    pub fn d1h_per_hcn(&self) -> usize {
        self.d1h_per_hcn
    }

    pub fn is_column_punctured(&self, j: usize) -> bool {
        self.pvn_columns.binary_search(&j).is_ok()
    }

    /// Checks the spec against a code with `n` protograph columns of order `order`.
    pub fn check(&self, order: HadamardOrder, n: usize) -> Result<()> {
        if let Some(&j) = self.pvn_columns.iter().find(|&&j| j >= n) {
            return Err(Error::Parameter(format!("punctured column {j} outside 0..{n}")));
        }
        if self.pvn_columns.len() >= n {
            return Err(Error::Parameter("every protograph column is punctured".into()));
        }
        if self.d1h_per_hcn > 0 && order.is_even() {
            return Err(Error::Parameter(format!(
                "D1H puncturing needs odd r (got r = {})",
                order.r()
            )));
        }
        if self.d1h_per_hcn > order.r() as usize {
            return Err(Error::Parameter(format!(
                "{} punctured D1H nodes exceed r = {}",
                self.d1h_per_hcn,
                order.r()
            )));
        }
        Ok(())
    }
}

/// Code rate kept as the unreduced quotient of the rate formula so that it
/// prints the way the design tables state it (e.g. `18/6096`).
#[derive(Clone, Copy, Debug)]
pub struct CodeRate {
    pub numer: u64,
    pub denom: u64,
}

impl CodeRate {
    pub fn ratio(&self) -> Ratio<u64> {
        Ratio::new(self.numer, self.denom)
    }

    pub fn to_f64(&self) -> f64 {
        self.numer as f64 / self.denom as f64
    }
}

impl PartialEq for CodeRate {
    fn eq(&self, other: &Self) -> bool {
        self.ratio() == other.ratio()
    }
}

impl Eq for CodeRate {}

impl fmt::Display for CodeRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer, self.denom)
    }
}

/// Transmitted bits per protograph row and column before lifting:
/// `(parity bits per row, transmitted columns)`.
fn per_protograph(order: HadamardOrder, n: usize, p: &PunctureSpec) -> (u64, u64) {
    let q = order.q() as u64;
    let d = order.info_len() as u64;
    let per_row = match order.parity() {
        Parity::Even => q - d,
        Parity::Odd => q - 2 - p.d1h_per_hcn as u64,
    };
    (per_row, (n - p.pvn_columns.len()) as u64)
}

/// Exact design rate of the protograph with the given puncturing.
pub fn code_rate(b: &Protomatrix, punct: &PunctureSpec) -> Result<CodeRate> {
    let order = b.hadamard_order()?;
    rate_for(order, b.m, b.n, punct)
}

pub(crate) fn rate_for(order: HadamardOrder, m: usize, n: usize, punct: &PunctureSpec) -> Result<CodeRate> {
    punct.check(order, n)?;
    if n <= m {
        return Err(Error::Shape(format!("{m}x{n} protomatrix has no information columns")));
    }
    let (per_row, cols) = per_protograph(order, n, punct);
    Ok(CodeRate {
        numer: (n - m) as u64,
        denom: m as u64 * per_row + cols,
    })
}

/// Rate, information length and transmitted length of a lifted code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CodeGeometry {
    pub rate: CodeRate,
    pub k: u64,
    pub n_total: u64,
}

pub fn geometry(b: &Protomatrix, z1: usize, z2: usize, punct: &PunctureSpec) -> Result<CodeGeometry> {
    let rate = code_rate(b, punct)?;
    let z = (z1 * z2) as u64;
    Ok(CodeGeometry {
        rate,
        k: z * rate.numer,
        n_total: z * rate.denom,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn example() -> Protomatrix {
        Protomatrix::from_rows(&[[2, 0, 2, 2], [0, 2, 2, 2], [3, 2, 0, 1]]).unwrap()
    }

    #[test]
    fn accessors() {
        let b = example();
        assert_eq!((b.m(), b.n()), (3, 4));
        assert_eq!(b.uniform_row_weight(), Some(6));
        assert_eq!(b.col_weight(0), 5);
        assert_eq!(b.hadamard_order().unwrap().r(), 4);
        assert!(Protomatrix::from_rows(&[vec![1, 2], vec![1]]).is_err());
    }

    #[test]
    fn validate_reports_locations() {
        let b = example();
        let c = Constraints { m: 3, n: 4, row_weight: 6, min_col_weight: 1, max_col_weight: 9, max_entry: 2 };
        assert_eq!(validate(&b, &c), Err(vec![Violation::Entry { row: 2, col: 0, value: 3 }]));
        let z = Protomatrix::from_rows(&[[2, 0, 2, 2], [0, 0, 0, 0]]).unwrap();
        let errs = validate(&z, &Constraints { m: 0, n: 0, max_entry: 3, ..c }).unwrap_err();
        assert!(errs.contains(&Violation::RowWeight { row: 1, weight: 0 }));
    }

    #[test]
    fn puncture_checks() {
        let b = example();
        assert!(code_rate(&b, &PunctureSpec::new(vec![], 1)).is_err());
        assert!(code_rate(&b, &PunctureSpec::new(vec![4], 0)).is_err());
        assert!(code_rate(&b, &PunctureSpec::new(vec![0, 1, 2, 3], 0)).is_err());
        assert_eq!(PunctureSpec::new(vec![3, 1, 3], 0).pvn_columns(), &[1, 3]);
    }

    #[test]
    fn rate_display_is_unreduced() {
        let r = CodeRate { numer: 18, denom: 6096 };
        assert_eq!(alloc::format!("{r}"), "18/6096");
        assert_eq!(r.ratio(), Ratio::new(3, 1016));
    }
}
