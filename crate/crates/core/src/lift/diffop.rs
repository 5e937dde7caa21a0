//! Linear combinations of words in polynomial vector fields, applied to jets.

use crate::hvf::PolyVectorField;
use crate::jet::{jet_space, Jet};

use super::matrix::ConstantMatrix;

/// `sum_k c_k X_{w_k[0]} X_{w_k[1]} ... f` for words `w_k` (0-based field indices).
/// The last letter of a word acts first.
#[derive(Clone, Debug)]
pub struct DiffOperator {
    fields: Vec<PolyVectorField>,
    terms: Vec<(f64, Vec<usize>)>,
}

impl DiffOperator {
    pub fn new(fields: &[PolyVectorField], terms: Vec<(f64, Vec<usize>)>) -> DiffOperator {
        DiffOperator { fields: fields.to_vec(), terms }
    }

    pub fn word(fields: &[PolyVectorField], w: &[usize]) -> DiffOperator {
        DiffOperator::new(fields, vec![(1.0, w.to_vec())])
    }

    /// `L_A = sum_ij a_ij X_i X_j`.
    pub fn l_a(fields: &[PolyVectorField], a: &ConstantMatrix) -> DiffOperator {
        let m = a.m();
        let mut terms = Vec::new();
        for i in 0..m {
            for j in 0..m {
                let c = a.get(i, j);
                if c != 0.0 {
                    terms.push((c, vec![i, j]));
                }
            }
        }
        DiffOperator::new(fields, terms)
    }

    pub fn order(&self) -> usize {
        self.terms.iter().map(|(_, w)| w.len()).max().unwrap_or(0)
    }

    pub fn dim(&self) -> usize {
        self.fields.first().map(|f| f.dim()).unwrap_or(0)
    }

    /// Apply to the jet of `f` at `x0`; the result is valid to order `f.order - self.order()`.
    pub fn apply_jet(&self, x0: &[f64], f: &Jet) -> Jet {
        let sp = f.space();
        let pt = Jet::point(sp, x0);
        let coeffs: Vec<Vec<Option<Jet>>> = self
            .fields
            .iter()
            .map(|fl| fl.components().iter().map(|c| if c.is_zero() { None } else { Some(c.eval_jet(&pt)) }).collect())
            .collect();
        let mut acc = Jet::constant(sp, 0.0);
        for (c, w) in &self.terms {
            let mut g = f.clone();
            for &letter in w.iter().rev() {
                let mut next = Jet::constant(sp, 0.0);
                for (k, ck) in coeffs[letter].iter().enumerate() {
                    if let Some(ck) = ck {
                        next = next.add(&ck.mul(&g.derivative(k)));
                    }
                }
                g = next;
            }
            acc = acc.add(&g.scale(*c));
        }
        acc
    }

    /// Value of the operator applied to a function given on jets, at `x0`.
    pub fn apply_at<F: Fn(&[Jet]) -> Jet>(&self, x0: &[f64], f: F) -> f64 {
        let sp = jet_space(x0.len(), self.order());
        let x = Jet::point(sp, x0);
        self.apply_jet(x0, &f(&x)).value()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hvf::grushin;

    #[test]
    fn grushin_bracket_through_words() {
        // (X1 X2 - X2 X1) f = d2 f for X1 = d1, X2 = x1 d2
        let sys = grushin(1);
        let op = DiffOperator::new(sys.fields(), vec![(1.0, vec![0, 1]), (-1.0, vec![1, 0])]);
        let x0 = [0.4, -0.3];
        let v = op.apply_at(&x0, |x| x[0].mul(&x[1]).mul(&x[1]).add(&x[1].sin()));
        let exact = 2.0 * 0.4 * -0.3 + (-0.3f64).cos();
        assert!((v - exact).abs() < 1e-12);
    }
}
