//! Named brackets: the three-dimensional solvable algebras given by
//! `ad e1` restricted to the abelian ideal `span{e2, e3}`, plus the
//! Heisenberg and abelian families.

use nalgebra::Matrix2;

use crate::bracket::BracketTensor;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Known properties of a catalog bracket.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Expected {
    pub real_type: bool,
    pub flat: bool,
    pub nilpotent: bool,
}

#[derive(Clone, Debug)]
pub struct CatalogEntry<T: Real> {
    pub name: String,
    pub bracket: BracketTensor<T>,
    pub expected: Expected,
}

impl<T: Real> CatalogEntry<T> {
    pub fn dim(&self) -> usize {
        self.bracket.dim()
    }
}

/// Names accepted by [`lookup`]; entries with `lambda` take one parameter.
pub const NAMES: &[&str] = &[
    "h3",
    "s3",
    "s3,lambda",
    "s3',lambda",
    "e2",
    "heisenberg",
    "abelian",
];

/// `mu(e1, e_{2+j}) = sum_i n[(i, j)] e_{2+i}`.
fn from_ad_e1<T: Real>(n: Matrix2<T>) -> BracketTensor<T> {
    let mut entries = Vec::new();
    for j in 0..2 {
        for i in 0..2 {
            if n[(i, j)] != T::zero() {
                entries.push((0, 1 + j, 1 + i, n[(i, j)]));
            }
        }
    }
    BracketTensor::from_entries(3, &entries).expect("three-dimensional entries are in range")
}

/// `mu(e1, e2) = e3`.
pub fn heisenberg3<T: Real>() -> BracketTensor<T> {
    from_ad_e1(Matrix2::new(T::zero(), T::zero(), T::one(), T::zero()))
}

/// `ad e1 = [[1, 0], [1, 1]]`.
pub fn s3<T: Real>() -> BracketTensor<T> {
    from_ad_e1(Matrix2::new(T::one(), T::zero(), T::one(), T::one()))
}

/// `ad e1 = diag(1, lambda)`, `-1 <= lambda <= 1`.
pub fn s3_lambda<T: Real>(lambda: T) -> Result<BracketTensor<T>> {
    if !(lambda >= -T::one() && lambda <= T::one()) {
        return Err(Error::ParamOutOfRange(format!(
            "s3,lambda needs -1 <= lambda <= 1, got {lambda}"
        )));
    }
    Ok(from_ad_e1(Matrix2::new(T::one(), T::zero(), T::zero(), lambda)))
}

/// `ad e1 = [[lambda, 1], [-1, lambda]]`, `lambda > 0`.
pub fn s3_prime<T: Real>(lambda: T) -> Result<BracketTensor<T>> {
    if !(lambda > T::zero()) {
        return Err(Error::ParamOutOfRange(format!(
            "s3',lambda needs lambda > 0, got {lambda}"
        )));
    }
    Ok(from_ad_e1(Matrix2::new(lambda, T::one(), -T::one(), lambda)))
}

/// Rigid motions of the plane: `ad e1 = [[0, 1], [-1, 0]]`.
pub fn e2<T: Real>() -> BracketTensor<T> {
    from_ad_e1(Matrix2::new(T::zero(), T::one(), -T::one(), T::zero()))
}

/// Heisenberg algebra of dimension `2k + 1`: `mu(e_{2i-1}, e_{2i}) = e_{2k+1}`.
pub fn heisenberg<T: Real>(dim: usize) -> Result<BracketTensor<T>> {
    if dim < 3 || dim.is_multiple_of(2) {
        return Err(Error::ParamOutOfRange(format!(
            "heisenberg needs an odd dimension >= 3, got {dim}"
        )));
    }
    let center = dim - 1;
    let entries: Vec<_> = (0..dim / 2)
        .map(|i| (2 * i, 2 * i + 1, center, T::one()))
        .collect();
    BracketTensor::from_entries(dim, &entries)
}

pub fn abelian<T: Real>(dim: usize) -> Result<BracketTensor<T>> {
    BracketTensor::zeros(dim)
}

/// Looks up a catalog entry by name. `param` is `lambda` for the two
/// one-parameter families and the dimension for `heisenberg`/`abelian`.
pub fn lookup<T: Real>(name: &str, param: Option<f64>) -> Result<CatalogEntry<T>> {
    let need = |what: &str| {
        param.ok_or_else(|| Error::ParamOutOfRange(format!("`{name}` needs a {what}")))
    };
    let as_dim = |p: f64| -> Result<usize> {
        if p.fract() != 0.0 || p < 1.0 {
            return Err(Error::ParamOutOfRange(format!("dimension must be a positive integer, got {p}")));
        }
        Ok(p as usize)
    };
    let expected = |real_type, flat, nilpotent| Expected {
        real_type,
        flat,
        nilpotent,
    };
    let (bracket, exp) = match name {
        "h3" => (heisenberg3(), expected(true, false, true)),
        "s3" => (s3(), expected(true, false, false)),
        "s3,lambda" | "s3_lambda" => (s3_lambda(T::of(need("lambda")?))?, expected(true, false, false)),
        "s3',lambda" | "s3_prime" => (s3_prime(T::of(need("lambda")?))?, expected(true, false, false)),
        "e2" => (e2(), expected(false, true, false)),
        "heisenberg" => (heisenberg(as_dim(need("dimension")?)?)?, expected(true, false, true)),
        "abelian" => (abelian(as_dim(need("dimension")?)?)?, expected(true, true, true)),
        other => return Err(Error::UnknownName(other.to_string())),
    };
    Ok(CatalogEntry {
        name: name.to_string(),
        bracket,
        expected: exp,
    })
}

/// The fixed list used by the catalog-wide checks.
pub fn standard_entries<T: Real>() -> Vec<CatalogEntry<T>> {
    let items: [(&str, Option<f64>); 10] = [
        ("h3", None),
        ("s3", None),
        ("s3,lambda", Some(1.0)),
        ("s3,lambda", Some(0.5)),
        ("s3,lambda", Some(-1.0)),
        ("s3',lambda", Some(0.3)),
        ("e2", None),
        ("heisenberg", Some(5.0)),
        ("abelian", Some(3.0)),
        ("s3,lambda", Some(0.0)),
    ];
    items
        .iter()
        .map(|(name, p)| lookup(name, *p).expect("standard entries are valid"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bracket::jacobi_residual;

    #[test]
    fn table_rows() {
        let h = heisenberg3::<f64>();
        assert_eq!(h.get(0, 1, 2), 1.0);
        assert_eq!(h.get(1, 0, 2), -1.0);
        let s = s3_lambda::<f64>(1.0).unwrap();
        assert_eq!((s.get(0, 1, 1), s.get(0, 2, 2)), (1.0, 1.0));
        let e = e2::<f64>();
        assert_eq!((e.get(0, 1, 2), e.get(0, 2, 1)), (-1.0, 1.0));
        let s = s3::<f64>();
        assert_eq!((s.get(0, 1, 1), s.get(0, 1, 2), s.get(0, 2, 2)), (1.0, 1.0, 1.0));
        let p = s3_prime::<f64>(0.3).unwrap();
        assert_eq!((p.get(0, 1, 1), p.get(0, 1, 2), p.get(0, 2, 1)), (0.3, -1.0, 1.0));
    }

    #[test]
    fn parameter_ranges() {
        assert!(matches!(s3_lambda::<f64>(1.5), Err(Error::ParamOutOfRange(_))));
        assert!(matches!(s3_prime::<f64>(0.0), Err(Error::ParamOutOfRange(_))));
        assert!(matches!(heisenberg::<f64>(4), Err(Error::ParamOutOfRange(_))));
        assert!(matches!(lookup::<f64>("so3", None), Err(Error::UnknownName(_))));
        assert!(matches!(lookup::<f64>("s3,lambda", None), Err(Error::ParamOutOfRange(_))));
    }

    #[test]
    fn every_entry_is_lie() {
        for entry in standard_entries::<f64>() {
            assert!(jacobi_residual(&entry.bracket) <= 1e-12, "{}", entry.name);
        }
        let h7 = heisenberg::<f64>(7).unwrap();
        assert_eq!(jacobi_residual(&h7), 0.0);
        assert_eq!(h7.norm_sq(), 6.0);
    }
}
