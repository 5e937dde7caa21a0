//! Truncated multivariate Taylor jets.
//!
//! A jet of order `r` in `n` variables stores the Taylor coefficients
//! `c_alpha` (|alpha| <= r) of a function around a base point, so that
//! `d^alpha f = alpha! * c_alpha`.

use std::collections::HashMap;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Mutex, OnceLock};

/// Monomial bookkeeping shared by every jet of a given shape.
#[derive(Debug)]
pub struct JetSpace {
    pub nvars: usize,
    pub order: usize,
    monos: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    mul_table: Vec<(u32, u32, u32)>,
    /// `deriv[l][i] = Some((j, e))` when d/dx_l of monomial i is e * monomial j.
    deriv: Vec<Vec<Option<(usize, f64)>>>,
    factorials: Vec<f64>,
}

impl JetSpace {
    fn build(nvars: usize, order: usize) -> JetSpace {
        let mut monos: Vec<Vec<u8>> = Vec::new();
        for d in 0..=order {
            let mut cur = vec![0u8; nvars];
            gen_degree(nvars, d, 0, &mut cur, &mut monos);
        }
        let index: HashMap<Vec<u8>, usize> =
            monos.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        let deg = |m: &Vec<u8>| m.iter().map(|&e| e as usize).sum::<usize>();
        let mut mul_table = Vec::new();
        for (i, a) in monos.iter().enumerate() {
            for (j, b) in monos.iter().enumerate() {
                if deg(a) + deg(b) > order {
                    continue;
                }
                let s: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                mul_table.push((i as u32, j as u32, index[&s] as u32));
            }
        }
        let deriv = (0..nvars)
            .map(|l| {
                monos
                    .iter()
                    .map(|m| {
                        if m[l] == 0 {
                            None
                        } else {
                            let mut t = m.clone();
                            t[l] -= 1;
                            Some((index[&t], m[l] as f64))
                        }
                    })
                    .collect()
            })
            .collect();
        let mut factorials = vec![1.0; order + 2];
        for k in 1..factorials.len() {
            factorials[k] = factorials[k - 1] * k as f64;
        }
        JetSpace { nvars, order, monos, index, mul_table, deriv, factorials }
    }

    pub fn len(&self) -> usize {
        self.monos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monos.is_empty()
    }

    pub fn monomials(&self) -> &[Vec<u8>] {
        &self.monos
    }

    pub fn index_of(&self, alpha: &[u8]) -> Option<usize> {
        self.index.get(alpha).copied()
    }

    fn alpha_factorial(&self, i: usize) -> f64 {
        self.monos[i].iter().map(|&e| self.factorials[e as usize]).product()
    }
}

fn gen_degree(n: usize, d: usize, pos: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if pos == n - 1 {
        cur[pos] = d as u8;
        out.push(cur.clone());
        cur[pos] = 0;
        return;
    }
    for e in (0..=d).rev() {
        cur[pos] = e as u8;
        gen_degree(n, d - e, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

/// Shared, leaked jet spaces keyed by (nvars, order).
pub fn jet_space(nvars: usize, order: usize) -> &'static JetSpace {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), &'static JetSpace>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut g = cache.lock().expect("jet cache poisoned");
    g.entry((nvars, order))
        .or_insert_with(|| Box::leak(Box::new(JetSpace::build(nvars, order))))
}

#[derive(Clone, Debug)]
pub struct Jet {
    sp: &'static JetSpace,
    c: Vec<f64>,
}

impl Jet {
    pub fn constant(sp: &'static JetSpace, v: f64) -> Jet {
        let mut c = vec![0.0; sp.len()];
        c[0] = v;
        Jet { sp, c }
    }

    /// The jet of the coordinate x_k around a point whose k-th coordinate is `v0`.
    pub fn variable(sp: &'static JetSpace, k: usize, v0: f64) -> Jet {
        let mut j = Jet::constant(sp, v0);
        if sp.order >= 1 {
            let mut a = vec![0u8; sp.nvars];
            a[k] = 1;
            j.c[sp.index[&a]] = 1.0;
        }
        j
    }

    /// Jets of all coordinates around `x0`.
    pub fn point(sp: &'static JetSpace, x0: &[f64]) -> Vec<Jet> {
        x0.iter().enumerate().map(|(k, v)| Jet::variable(sp, k, *v)).collect()
    }

    pub fn space(&self) -> &'static JetSpace {
        self.sp
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    pub fn coeff(&self, alpha: &[u8]) -> f64 {
        self.sp.index_of(alpha).map(|i| self.c[i]).unwrap_or(0.0)
    }

    /// The partial derivative d^alpha at the base point.
    pub fn partial(&self, alpha: &[u8]) -> f64 {
        match self.sp.index_of(alpha) {
            Some(i) => self.c[i] * self.sp.alpha_factorial(i),
            None => f64::NAN,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|v| v.is_finite())
    }

    pub fn add(&self, o: &Jet) -> Jet {
        Jet { sp: self.sp, c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, o: &Jet) -> Jet {
        Jet { sp: self.sp, c: self.c.iter().zip(&o.c).map(|(a, b)| a - b).collect() }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet { sp: self.sp, c: self.c.iter().map(|a| a * s).collect() }
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut j = self.clone();
        j.c[0] += s;
        j
    }

    pub fn mul(&self, o: &Jet) -> Jet {
        let mut c = vec![0.0; self.c.len()];
        for &(i, j, k) in &self.sp.mul_table {
            let a = self.c[i as usize];
            if a != 0.0 {
                c[k as usize] += a * o.c[j as usize];
            }
        }
        Jet { sp: self.sp, c }
    }

    /// Compose with a scalar function given its derivatives at the base value.
    pub fn apply(&self, derivs: &[f64]) -> Jet {
        let r = self.sp.order;
        let mut h = self.clone();
        h.c[0] = 0.0;
        let mut out = Jet::constant(self.sp, derivs[0]);
        let mut hp = Jet::constant(self.sp, 1.0);
        for k in 1..=r {
            hp = hp.mul(&h);
            let d = derivs.get(k).copied().unwrap_or(0.0);
            if d != 0.0 {
                out = out.add(&hp.scale(d / self.sp.factorials[k]));
            }
        }
        out
    }

    pub fn powf(&self, p: f64) -> Jet {
        let a = self.value();
        let mut d = Vec::with_capacity(self.sp.order + 1);
        let mut coef = 1.0;
        for k in 0..=self.sp.order {
            d.push(coef * a.powf(p - k as f64));
            coef *= p - k as f64;
        }
        self.apply(&d)
    }

    pub fn recip(&self) -> Jet {
        self.powf(-1.0)
    }

    pub fn div(&self, o: &Jet) -> Jet {
        self.mul(&o.recip())
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.apply(&vec![e; self.sp.order + 1])
    }

    pub fn ln(&self) -> Jet {
        let a = self.value();
        let mut d = vec![a.ln()];
        let mut f = 1.0;
        for k in 1..=self.sp.order {
            d.push(f * a.powi(-(k as i32)));
            f *= -(k as f64);
        }
        self.apply(&d)
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cyc = [s, c, -s, -c];
        self.apply(&(0..=self.sp.order).map(|k| cyc[k % 4]).collect::<Vec<_>>())
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cyc = [c, -s, -c, s];
        self.apply(&(0..=self.sp.order).map(|k| cyc[k % 4]).collect::<Vec<_>>())
    }

    /// Partial derivative in variable `l`; the top-order coefficients become zero.
    pub fn derivative(&self, l: usize) -> Jet {
        let mut c = vec![0.0; self.c.len()];
        for (i, d) in self.sp.deriv[l].iter().enumerate() {
            if let Some((j, e)) = d {
                c[*j] += e * self.c[i];
            }
        }
        Jet { sp: self.sp, c }
    }

    /// Apply the derivative d^alpha, lowering the valid order by |alpha|.
    pub fn derivative_multi(&self, alpha: &[u8]) -> Jet {
        let mut j = self.clone();
        for (l, &e) in alpha.iter().enumerate() {
            for _ in 0..e {
                j = j.derivative(l);
            }
        }
        j
    }

    /// Compose this jet (in the variables v around v0) with jets `g` whose
    /// values equal v0; the result lives in the space of `g`.
    pub fn compose(&self, g: &[Jet]) -> Jet {
        assert_eq!(g.len(), self.sp.nvars, "compose arity");
        let tsp = g[0].sp;
        let hs: Vec<Jet> = g
            .iter()
            .map(|x| {
                let mut h = x.clone();
                h.c[0] = 0.0;
                h
            })
            .collect();
        let r = self.sp.order.min(tsp.order);
        let powers: Vec<Vec<Jet>> = hs
            .iter()
            .map(|h| {
                let mut v = vec![Jet::constant(tsp, 1.0)];
                for i in 1..=r {
                    let n = v[i - 1].mul(h);
                    v.push(n);
                }
                v
            })
            .collect();
        let mut out = Jet::constant(tsp, 0.0);
        for (i, a) in self.sp.monos.iter().enumerate() {
            let ci = self.c[i];
            if ci == 0.0 || a.iter().map(|&e| e as usize).sum::<usize>() > r {
                continue;
            }
            let mut t = Jet::constant(tsp, ci);
            for (k, &e) in a.iter().enumerate() {
                if e > 0 {
                    t = t.mul(&powers[k][e as usize]);
                }
            }
            out = out.add(&t);
        }
        out
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, o: &Jet) -> Jet {
        Jet::add(self, o)
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, o: &Jet) -> Jet {
        Jet::sub(self, o)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, o: &Jet) -> Jet {
        Jet::mul(self, o)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}
