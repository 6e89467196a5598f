//! Multivariate polynomial gcd over Q, used to keep rational-function
//! representatives unique. Primitive PRS with a recursive content split;
//! fine for the expression sizes constraint analysis produces.

use num::rational::BigRational;
use num::One;

use super::poly::{Monomial, Poly};
use super::symbol::SymbolId;

/// Exact multivariate division. Returns None when `d` does not divide `p`.
pub fn div_exact(p: &Poly, d: &Poly) -> Option<Poly> {
    if d.is_zero() {
        return None;
    }
    if p.is_zero() {
        return Some(Poly::zero());
    }
    if let Some(c) = d.as_constant() {
        return Some(p.scale(&c.recip()));
    }
    let (dm, dc) = {
        let (m, c) = d.leading().unwrap();
        (m.clone(), c.clone())
    };
    let mut rem = p.clone();
    let mut quot = Poly::zero();
    while !rem.is_zero() {
        let (rm, rc) = {
            let (m, c) = rem.leading().unwrap();
            (m.clone(), c.clone())
        };
        let qm = rm.div(&dm)?;
        let qc = &rc / &dc;
        quot.add_term(qm.clone(), qc.clone());
        rem = &rem - &d.mul_mono(&qm, &qc);
        // Leading term strictly decreases each step, so this terminates.
    }
    Some(quot)
}

/// gcd of two polynomials over Q. The result is primitive with a positive
/// leading coefficient; gcd(0, 0) = 0 and gcd(p, 0) = primitive(p).
pub fn poly_gcd(a: &Poly, b: &Poly) -> Poly {
    let a = a.primitive_part();
    let b = b.primitive_part();
    gcd_inner(&a, &b)
}

fn gcd_inner(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.clone();
    }
    if b.is_zero() {
        return a.clone();
    }
    if a.as_constant().is_some() || b.as_constant().is_some() {
        return Poly::one();
    }
    // Work in the variable of highest ordering index present in either.
    let v = *a
        .variables()
        .union(&b.variables())
        .max()
        .expect("nonconstant");
    let (ca, pa) = content_split(a, v);
    let (cb, pb) = content_split(b, v);
    let cont = gcd_inner(&ca, &cb);

    let mut f = pa;
    let mut g = pb;
    if univ_degree(&f, v) < univ_degree(&g, v) {
        std::mem::swap(&mut f, &mut g);
    }
    while !g.is_zero() {
        let r = pseudo_rem(&f, &g, v);
        f = g;
        g = content_split(&r, v).1; // primitive part w.r.t. v
    }
    let g_final = if univ_degree(&f, v) == 0 {
        Poly::one()
    } else {
        f
    };
    (&cont * &g_final).primitive_part()
}

fn univ_degree(p: &Poly, v: SymbolId) -> u32 {
    p.degree_in(v)
}

/// Split p = content * primitive w.r.t. v, content over the remaining
/// variables. For p not containing v this is (p, 1)-like with the whole
/// polynomial as content.
fn content_split(p: &Poly, v: SymbolId) -> (Poly, Poly) {
    if p.is_zero() {
        return (Poly::zero(), Poly::zero());
    }
    let coeffs = p.coeffs_in(v);
    let mut cont = Poly::zero();
    for c in &coeffs {
        cont = gcd_inner(&cont.primitive_part(), &c.primitive_part());
        if cont.is_one() {
            break;
        }
    }
    if cont.is_zero() {
        cont = Poly::one();
    }
    let prim = div_exact(p, &cont).expect("content divides");
    (cont, prim.primitive_part())
}

/// Pseudo-remainder of a by b in variable v: lc(b)^(da-db+1) * a reduced
/// until its v-degree drops below b's.
fn pseudo_rem(a: &Poly, b: &Poly, v: SymbolId) -> Poly {
    let db = univ_degree(b, v);
    let b_coeffs = b.coeffs_in(v);
    let lc_b = b_coeffs[db as usize].clone();
    let mut r = a.clone();
    loop {
        let dr = univ_degree(&r, v);
        if r.is_zero() || dr < db {
            return r;
        }
        let r_coeffs = r.coeffs_in(v);
        let lc_r = r_coeffs[dr as usize].clone();
        // r <- lc_b * r - lc_r * v^(dr-db) * b
        let shift = Monomial::var(v);
        let mut shift_pow = Monomial::unit();
        for _ in 0..(dr - db) {
            shift_pow = shift_pow.mul(&shift);
        }
        let scaled_b = b.mul_mono(&shift_pow, &BigRational::one());
        r = &(&lc_b * &r) - &(&lc_r * &scaled_b);
        if univ_degree(&r, v) >= dr && !r.is_zero() {
            // Cancellation failed to reduce the degree; cannot happen with
            // exact arithmetic.
            unreachable!("pseudo-division did not reduce degree");
        }
    }
}

/// lcm(a, b) = a*b / gcd, primitive-normalized.
pub fn poly_lcm(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() || b.is_zero() {
        return Poly::zero();
    }
    let g = poly_gcd(a, b);
    div_exact(&(a * b), &g)
        .expect("gcd divides product")
        .primitive_part()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: u32) -> Poly {
        Poly::var(SymbolId(i))
    }

    #[test]
    fn univariate_gcd() {
        let x = v(0);
        // (x^2 - 1) and (x - 1) -> x - 1
        let a = &(&x * &x) - &Poly::one();
        let b = &x - &Poly::one();
        assert_eq!(poly_gcd(&a, &b), b);
    }

    #[test]
    fn multivariate_gcd() {
        let x = v(0);
        let y = v(1);
        // (x^2 - y^2) and (x - y)^2 -> x - y
        let diff = &x - &y;
        let a = &(&x * &x) - &(&y * &y);
        let b = &diff * &diff;
        assert_eq!(poly_gcd(&a, &b), diff);
        // coprime
        let c = &x + &Poly::one();
        assert_eq!(poly_gcd(&c, &y), Poly::one());
    }

    #[test]
    fn exact_division() {
        let x = v(0);
        let y = v(1);
        let a = &(&x * &x) - &(&y * &y);
        let d = &x + &y;
        let q = div_exact(&a, &d).unwrap();
        assert_eq!(q, &x - &y);
        assert!(div_exact(&d, &a).is_none());
    }

    #[test]
    fn gcd_with_rational_coefficients() {
        let x = v(0);
        // (x/2 - 1/2) vs (x^2 - 1): primitive gcd is x - 1
        let a = x.scale(&BigRational::new(1.into(), 2.into()))
            - Poly::constant(BigRational::new(1.into(), 2.into()));
        let b = &(&v(0) * &v(0)) - &Poly::one();
        assert_eq!(poly_gcd(&a, &b), &v(0) - &Poly::one());
    }
}
