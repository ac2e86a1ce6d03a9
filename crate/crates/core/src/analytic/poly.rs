//! Dense polynomials in the monomial basis and the Appell sequence used by
//! the finite-time survival series.

/// Coefficients in ascending degree order; `coeffs[k]` multiplies `t^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    pub coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() <= 1 {
            return Polynomial::constant(0.0);
        }
        Polynomial {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c)
                .collect(),
        }
    }

    /// Antiderivative with constant term chosen so the result vanishes at
    /// `root`.
    pub fn antiderivative_vanishing_at(&self, root: f64) -> Polynomial {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(0.0);
        coeffs.extend(self.coeffs.iter().enumerate().map(|(k, c)| c / (k + 1) as f64));
        let mut p = Polynomial { coeffs };
        let c0 = p.eval(root);
        p.coeffs[0] = -c0;
        p
    }
}

/// Appell sequence pinned by a root per member: the zeroth member is the
/// constant 1, each member's derivative is the previous member, and the k-th
/// member vanishes at `roots[k-1]`. The degree-k member therefore has
/// leading coefficient 1/k!.
pub fn appell_sequence(roots: &[f64]) -> Vec<Polynomial> {
    let mut seq = Vec::with_capacity(roots.len() + 1);
    seq.push(Polynomial::constant(1.0));
    for &root in roots {
        let next = seq.last().unwrap().antiderivative_vanishing_at(root);
        seq.push(next);
    }
    seq
}

/// Evaluate just the final Appell member at `t` without keeping the whole
/// sequence; used in the inner loop of the survival series.
pub fn appell_eval(roots: &[f64], t: f64) -> f64 {
    let mut coeffs = vec![1.0];
    for &root in roots {
        let mut next = Vec::with_capacity(coeffs.len() + 1);
        next.push(0.0);
        next.extend(coeffs.iter().enumerate().map(|(k, c)| c / (k + 1) as f64));
        let at_root = next.iter().rev().fold(0.0, |acc, c| acc * root + c);
        next[0] = -at_root;
        coeffs = next;
    }
    coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_members_match_hand_expansion() {
        let seq = appell_sequence(&[2.0, 3.0]);
        assert_eq!(seq[0].coeffs, vec![1.0]);
        // A1(t) = t - k1.
        assert_eq!(seq[1].coeffs, vec![-2.0, 1.0]);
        // A2(t) = t^2/2 - k1 t + (k1 k2 - k2^2 / 2).
        assert_eq!(seq[2].coeffs, vec![2.0 * 3.0 - 4.5, -2.0, 0.5]);
        // A2' = A1 coefficientwise.
        assert_eq!(seq[2].derivative().coeffs, seq[1].coeffs);
    }

    #[test]
    fn eval_shortcut_matches_sequence() {
        let roots = [0.3, 1.7, 0.9, 2.2];
        let seq = appell_sequence(&roots);
        for t in [-1.0, 0.0, 0.5, 3.0] {
            assert!((appell_eval(&roots, t) - seq[4].eval(t)).abs() < 1e-12);
        }
    }
}
