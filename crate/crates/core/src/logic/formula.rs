use std::fmt;

use crate::trajectory::{COMPARTMENTS, DIM};

/// Comparison used by an atomic predicate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    /// `x[coord] <= threshold`
    Le,
    /// `x[coord] >= threshold`
    Ge,
}

/// Single-coordinate threshold predicate, e.g. `I <= 0.3`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Predicate {
    pub coord: usize,
    pub relation: Relation,
    pub threshold: f64,
}

impl Predicate {
    pub fn new(coord: usize, relation: Relation, threshold: f64) -> Self {
        assert!(coord < DIM, "coordinate {coord} out of range");
        assert!(threshold.is_finite(), "threshold must be finite");
        Predicate {
            coord,
            relation,
            threshold,
        }
    }

    /// Signed infinity-norm distance of `x` to the predicate's half-space boundary:
    /// positive inside, negative outside.
    pub fn robustness(&self, x: f64) -> f64 {
        match self.relation {
            Relation::Le => self.threshold - x,
            Relation::Ge => x - self.threshold,
        }
    }

    pub fn holds(&self, x: f64) -> bool {
        match self.relation {
            Relation::Le => x <= self.threshold,
            Relation::Ge => x >= self.threshold,
        }
    }
}

/// Bounded time window `[start, end]` in steps (days).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Window {
    pub start: usize,
    pub end: usize,
}

impl Window {
    pub fn new(start: usize, end: usize) -> Self {
        assert!(start <= end, "window start {start} exceeds end {end}");
        Window { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.start, self.end)
    }
}

/// Metric temporal logic formula over discrete time.
#[derive(Clone, Debug, PartialEq)]
pub enum Formula {
    True,
    Atom(Predicate),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Until {
        lhs: Box<Formula>,
        rhs: Box<Formula>,
        window: Window,
    },
    Eventually {
        child: Box<Formula>,
        window: Window,
    },
    Always {
        child: Box<Formula>,
        window: Window,
    },
}

impl Formula {
    pub fn atom(coord: usize, relation: Relation, threshold: f64) -> Self {
        Formula::Atom(Predicate::new(coord, relation, threshold))
    }

    pub fn le(coord: usize, threshold: f64) -> Self {
        Formula::atom(coord, Relation::Le, threshold)
    }

    pub fn ge(coord: usize, threshold: f64) -> Self {
        Formula::atom(coord, Relation::Ge, threshold)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(child: Formula) -> Self {
        Formula::Not(Box::new(child))
    }

    pub fn and(lhs: Formula, rhs: Formula) -> Self {
        Formula::And(Box::new(lhs), Box::new(rhs))
    }

    pub fn or(lhs: Formula, rhs: Formula) -> Self {
        Formula::Or(Box::new(lhs), Box::new(rhs))
    }

    pub fn until(lhs: Formula, rhs: Formula, start: usize, end: usize) -> Self {
        Formula::Until {
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
            window: Window::new(start, end),
        }
    }

    pub fn eventually(child: Formula, start: usize, end: usize) -> Self {
        Formula::Eventually {
            child: Box::new(child),
            window: Window::new(start, end),
        }
    }

    pub fn always(child: Formula, start: usize, end: usize) -> Self {
        Formula::Always {
            child: Box::new(child),
            window: Window::new(start, end),
        }
    }

    /// Smallest `K` such that evaluating the formula at index 0 reads only indices `<= K`.
    pub fn horizon(&self) -> usize {
        match self {
            Formula::True | Formula::Atom(_) => 0,
            Formula::Not(c) => c.horizon(),
            Formula::And(a, b) | Formula::Or(a, b) => a.horizon().max(b.horizon()),
            Formula::Eventually { child, window } | Formula::Always { child, window } => {
                window.end + child.horizon()
            }
            Formula::Until { lhs, rhs, window } => {
                // lhs is read on [k, k'), so never when the window ends at 0
                let left = if window.end > 0 {
                    window.end - 1 + lhs.horizon()
                } else {
                    0
                };
                left.max(window.end + rhs.horizon())
            }
        }
    }

    /// Nesting depth (atoms and `true` have depth 0).
    pub fn depth(&self) -> usize {
        match self {
            Formula::True | Formula::Atom(_) => 0,
            Formula::Not(c) => 1 + c.depth(),
            Formula::And(a, b) | Formula::Or(a, b) => 1 + a.depth().max(b.depth()),
            Formula::Until { lhs, rhs, .. } => 1 + lhs.depth().max(rhs.depth()),
            Formula::Eventually { child, .. } | Formula::Always { child, .. } => 1 + child.depth(),
        }
    }

    /// All atomic predicates, left to right.
    pub fn atoms(&self) -> Vec<Predicate> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut Vec<Predicate>) {
        match self {
            Formula::True => {}
            Formula::Atom(p) => out.push(*p),
            Formula::Not(c) => c.collect_atoms(out),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            Formula::Until { lhs, rhs, .. } => {
                lhs.collect_atoms(out);
                rhs.collect_atoms(out);
            }
            Formula::Eventually { child, .. } | Formula::Always { child, .. } => {
                child.collect_atoms(out)
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Or(..) => 1,
            Formula::And(..) => 2,
            Formula::Until { .. } => 3,
            Formula::Not(_) | Formula::Eventually { .. } | Formula::Always { .. } => 4,
            Formula::True | Formula::Atom(_) => 5,
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.relation {
            Relation::Le => "<=",
            Relation::Ge => ">=",
        };
        write!(f, "{} {} {}", COMPARTMENTS[self.coord], op, self.threshold)
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Formula, min_prec: u8) -> fmt::Result {
    if child.precedence() < min_prec {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

fn write_unary_child(f: &mut fmt::Formatter<'_>, child: &Formula) -> fmt::Result {
    if matches!(child, Formula::Atom(_)) || child.precedence() < 4 {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

/// Prints in the concrete syntax accepted by [`super::parse`]; re-parsing the
/// output yields a structurally identical formula.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::Atom(p) => write!(f, "{p}"),
            Formula::Not(c) => {
                write!(f, "!")?;
                write_unary_child(f, c)
            }
            Formula::And(a, b) => {
                write_child(f, a, 2)?;
                write!(f, " & ")?;
                write_child(f, b, 3)
            }
            Formula::Or(a, b) => {
                write_child(f, a, 1)?;
                write!(f, " | ")?;
                write_child(f, b, 2)
            }
            Formula::Until { lhs, rhs, window } => {
                write_child(f, lhs, 4)?;
                write!(f, " U{window} ")?;
                write_child(f, rhs, 4)
            }
            Formula::Eventually { child, window } => {
                write!(f, "F{window}")?;
                write_unary_child(f, child)
            }
            Formula::Always { child, window } => {
                write!(f, "G{window}")?;
                write_unary_child(f, child)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{D, I, R};

    #[test]
    fn horizon_of_atom_is_zero() {
        assert_eq!(Formula::le(I, 0.3).horizon(), 0);
    }

    #[test]
    fn horizon_of_always() {
        assert_eq!(Formula::always(Formula::le(I, 0.3), 0, 100).horizon(), 100);
    }

    #[test]
    fn nested_bounds_add() {
        let f = Formula::eventually(Formula::always(Formula::le(I, 0.3), 0, 15), 40, 60);
        assert_eq!(f.horizon(), 75);
    }

    #[test]
    fn until_horizon_accounts_for_both_sides() {
        let f = Formula::until(
            Formula::always(Formula::le(I, 1.0), 0, 10),
            Formula::ge(R, 1.0),
            2,
            5,
        );
        assert_eq!(f.horizon(), 14);
        let g = Formula::until(
            Formula::always(Formula::le(D, 1.0), 0, 10),
            Formula::True,
            0,
            0,
        );
        assert_eq!(g.horizon(), 0);
    }

    #[test]
    fn display_of_three_clause_formula() {
        let f = Formula::and(
            Formula::and(
                Formula::always(Formula::le(I, 0.3), 0, 100),
                Formula::always(Formula::le(D, 0.05), 0, 100),
            ),
            Formula::eventually(Formula::ge(R, 8.0), 40, 60),
        );
        assert_eq!(
            f.to_string(),
            "G[0,100](I <= 0.3) & G[0,100](D <= 0.05) & F[40,60](R >= 8)"
        );
    }
}
