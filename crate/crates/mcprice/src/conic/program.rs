//! Conic programs in slack standard form.
//!
//! A program is `optimize c'x  s.t.  s = b - Ax,  s in K`, where `K` is an
//! ordered product of cone blocks covering the rows. `A` is stored as
//! triplets in deterministic build order; the solver densifies it. Column
//! and row names form bijections so compiled programs can be audited and
//! dumped.

use super::cones;

/// Cone family of one contiguous block of rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConeKind {
    /// `s = 0` (equality rows).
    Zero,
    /// `s >= 0` componentwise.
    Nonnegative,
    /// `s in K_exp`, exactly three rows.
    Exponential,
    /// `s in K*_exp`, exactly three rows.
    DualExponential,
}

/// A contiguous block of rows living in one cone.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConeBlock {
    pub kind: ConeKind,
    /// First row of the block.
    pub offset: usize,
    /// Number of rows; always 3 for the exponential kinds.
    pub dim: usize,
}

/// Objective direction. The solver always reports the objective in this
/// user sense; internally it minimizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// An immutable compiled conic program. Assemble with [`ProgramBuilder`].
#[derive(Clone, Debug, PartialEq)]
pub struct ConicProgram {
    n_cols: usize,
    sense: Sense,
    objective: Vec<f64>,
    triplets: Vec<(usize, usize, f64)>,
    rhs: Vec<f64>,
    blocks: Vec<ConeBlock>,
    col_names: Vec<String>,
    row_names: Vec<String>,
}

impl ConicProgram {
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    /// Objective coefficients in the user sense, length `n_cols`.
    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    /// Constraint matrix entries `(row, col, value)` in build order.
    pub fn triplets(&self) -> &[(usize, usize, f64)] {
        &self.triplets
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn blocks(&self) -> &[ConeBlock] {
        &self.blocks
    }

    pub fn col_names(&self) -> &[String] {
        &self.col_names
    }

    pub fn row_names(&self) -> &[String] {
        &self.row_names
    }

    pub fn col_index(&self, name: &str) -> Option<usize> {
        self.col_names.iter().position(|n| n == name)
    }

    pub fn row_index(&self, name: &str) -> Option<usize> {
        self.row_names.iter().position(|n| n == name)
    }

    /// True when no exponential-family blocks are present (a pure LP).
    pub fn is_linear(&self) -> bool {
        self.blocks
            .iter()
            .all(|b| matches!(b.kind, ConeKind::Zero | ConeKind::Nonnegative))
    }

    /// `c'x` in the user sense.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n_cols);
        self.objective.iter().zip(x).map(|(c, xj)| c * xj).sum()
    }

    /// The bound `b'y` a dual vector certifies for the user-sense optimum:
    /// an upper bound when maximizing, a lower bound when minimizing.
    pub fn dual_bound(&self, y: &[f64]) -> f64 {
        assert_eq!(y.len(), self.n_rows());
        let by: f64 = self.rhs.iter().zip(y).map(|(b, yi)| b * yi).sum();
        match self.sense {
            Sense::Maximize => by,
            Sense::Minimize => -by,
        }
    }

    /// Slack `s = b - Ax`.
    pub fn slack(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols);
        let mut s = self.rhs.clone();
        for &(r, c, v) in &self.triplets {
            s[r] -= v * x[c];
        }
        s
    }

    /// Worst constraint violation of `x`: max over blocks of the max-norm
    /// residual (equalities), negative slack (inequalities), or Euclidean
    /// cone distance (exponential blocks).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let s = self.slack(x);
        let mut worst = 0.0f64;
        for block in &self.blocks {
            let rows = &s[block.offset..block.offset + block.dim];
            let v = match block.kind {
                ConeKind::Zero => rows.iter().fold(0.0f64, |a, r| a.max(r.abs())),
                ConeKind::Nonnegative => rows.iter().fold(0.0f64, |a, r| a.max(-r.min(0.0))),
                ConeKind::Exponential => {
                    cones::exp_cone_distance(&[rows[0], rows[1], rows[2]])
                }
                ConeKind::DualExponential => {
                    cones::dual_exp_cone_distance(&[rows[0], rows[1], rows[2]])
                }
            };
            worst = worst.max(v);
        }
        worst
    }
}

/// Incremental assembly of a [`ConicProgram`]. Columns first, then rows in
/// blocks; the builder enforces block shape and name bijectivity.
pub struct ProgramBuilder {
    sense: Sense,
    objective: Vec<f64>,
    col_names: Vec<String>,
    triplets: Vec<(usize, usize, f64)>,
    rhs: Vec<f64>,
    row_names: Vec<String>,
    blocks: Vec<ConeBlock>,
    open_block: Option<ConeKind>,
}

impl ProgramBuilder {
    pub fn new(sense: Sense) -> Self {
        ProgramBuilder {
            sense,
            objective: Vec::new(),
            col_names: Vec::new(),
            triplets: Vec::new(),
            rhs: Vec::new(),
            row_names: Vec::new(),
            blocks: Vec::new(),
            open_block: None,
        }
    }

    /// Adds a column with objective coefficient 0 and returns its index.
    pub fn add_col(&mut self, name: impl Into<String>) -> usize {
        let name = name.into();
        assert!(
            !self.col_names.contains(&name),
            "duplicate column name {name}"
        );
        self.col_names.push(name);
        self.objective.push(0.0);
        self.col_names.len() - 1
    }

    pub fn set_objective(&mut self, col: usize, value: f64) {
        self.objective[col] = value;
    }

    /// Opens a new cone block; subsequent rows belong to it until the next
    /// `begin_block` or `finish`.
    pub fn begin_block(&mut self, kind: ConeKind) {
        self.close_block();
        self.open_block = Some(kind);
        self.blocks.push(ConeBlock { kind, offset: self.rhs.len(), dim: 0 });
    }

    /// Adds the row `sum coeffs * x  (cone-relation)  rhs` to the open
    /// block. Zero coefficients are dropped.
    pub fn add_row(&mut self, name: impl Into<String>, coeffs: &[(usize, f64)], rhs: f64) {
        assert!(self.open_block.is_some(), "add_row outside a block");
        let name = name.into();
        assert!(!self.row_names.contains(&name), "duplicate row name {name}");
        let row = self.rhs.len();
        for &(col, value) in coeffs {
            assert!(col < self.col_names.len());
            assert!(value.is_finite());
            if value != 0.0 {
                self.triplets.push((row, col, value));
            }
        }
        assert!(rhs.is_finite());
        self.rhs.push(rhs);
        self.row_names.push(name);
        self.blocks.last_mut().unwrap().dim += 1;
    }

    fn close_block(&mut self) {
        if let Some(kind) = self.open_block.take() {
            let block = self.blocks.last().unwrap();
            match kind {
                ConeKind::Exponential | ConeKind::DualExponential => {
                    assert_eq!(block.dim, 3, "exponential blocks have exactly 3 rows")
                }
                _ => assert!(block.dim >= 1, "empty cone block"),
            }
        }
    }

    pub fn finish(mut self) -> ConicProgram {
        self.close_block();
        ConicProgram {
            n_cols: self.col_names.len(),
            sense: self.sense,
            objective: self.objective,
            triplets: self.triplets,
            rhs: self.rhs,
            blocks: self.blocks,
            col_names: self.col_names,
            row_names: self.row_names,
        }
    }
}
