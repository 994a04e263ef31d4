//! Welch t-test and one-way ANOVA with p-values from the regularized
//! incomplete beta function.

use crate::error::{ensure, Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection.
        let pi = core::f64::consts::PI;
        return libm::log(pi / libm::fabs(libm::sin(pi * x))) - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * libm::log(2.0 * core::f64::consts::PI) + (x + 0.5) * libm::log(t) - t + libm::log(a)
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    ensure!(a > 0.0 && b > 0.0, "incomplete beta needs a, b > 0 (got {a}, {b})");
    ensure!((0.0..=1.0).contains(&x), "incomplete beta argument {x} outside [0, 1]");
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * libm::log(x) + b * libm::log1p(-x);
    let front = libm::exp(ln_front);
    let v = if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x)? / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x)? / b
    };
    Ok(v.clamp(0.0, 1.0))
}

/// Continued fraction for the incomplete beta, modified Lentz.
fn beta_cf(a: f64, b: f64, x: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if libm::fabs(d) < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=20_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if libm::fabs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if libm::fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if libm::fabs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if libm::fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if libm::fabs(del - 1.0) < EPS {
            return Ok(h);
        }
    }
    Err(Error::NoConvergence(alloc::format!("incomplete beta continued fraction at a={a}, b={b}, x={x}")))
}

/// Two-sided p-value of Student's t with `dof` degrees of freedom.
pub fn student_t_two_sided(t: f64, dof: f64) -> Result<f64> {
    ensure!(dof > 0.0, "degrees of freedom must be positive, got {dof}");
    if t.is_infinite() {
        return Ok(0.0);
    }
    reg_inc_beta(dof / 2.0, 0.5, dof / (dof + t * t))
}

/// Upper tail of the F distribution.
pub fn f_survival(f: f64, d1: f64, d2: f64) -> Result<f64> {
    ensure!(d1 > 0.0 && d2 > 0.0, "F degrees of freedom must be positive");
    if f.is_infinite() {
        return Ok(0.0);
    }
    if f <= 0.0 {
        return Ok(1.0);
    }
    reg_inc_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub dof: f64,
    pub p: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Anova {
    pub f: f64,
    pub df_between: f64,
    pub df_within: f64,
    pub p: f64,
}

fn moments(x: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let ss = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (n, mean, ss)
}

fn check_groups(groups: &[&[f64]]) -> Result<()> {
    for (i, g) in groups.iter().enumerate() {
        ensure!(g.len() >= 2, "group {i} has {} samples, need at least 2", g.len());
        ensure!(g.iter().all(|v| v.is_finite()), "group {i} has non-finite samples");
    }
    Ok(())
}

/// Welch's unequal-variance t-test, two-sided.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    check_groups(&[a, b])?;
    let (na, ma, ssa) = moments(a);
    let (nb, mb, ssb) = moments(b);
    let (va, vb) = (ssa / (na - 1.0) / na, ssb / (nb - 1.0) / nb);
    let se2 = va + vb;
    if se2 == 0.0 {
        return Ok(if ma == mb {
            TTest { t: 0.0, dof: na + nb - 2.0, p: 1.0 }
        } else {
            TTest { t: libm::copysign(f64::INFINITY, ma - mb), dof: na + nb - 2.0, p: 0.0 }
        });
    }
    let t = (ma - mb) / libm::sqrt(se2);
    let dof = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    Ok(TTest { t, dof, p: student_t_two_sided(t, dof)? })
}

/// Equal-variance two-sample t-test, two-sided.
pub fn pooled_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    check_groups(&[a, b])?;
    let (na, ma, ssa) = moments(a);
    let (nb, mb, ssb) = moments(b);
    let dof = na + nb - 2.0;
    let sp2 = (ssa + ssb) / dof;
    if sp2 == 0.0 {
        return Ok(if ma == mb {
            TTest { t: 0.0, dof, p: 1.0 }
        } else {
            TTest { t: libm::copysign(f64::INFINITY, ma - mb), dof, p: 0.0 }
        });
    }
    let t = (ma - mb) / libm::sqrt(sp2 * (1.0 / na + 1.0 / nb));
    Ok(TTest { t, dof, p: student_t_two_sided(t, dof)? })
}

/// Classic one-way ANOVA F-test.
pub fn one_way_anova(groups: &[&[f64]]) -> Result<Anova> {
    ensure!(groups.len() >= 2, "anova needs at least two groups, got {}", groups.len());
    check_groups(groups)?;
    let total: f64 = groups.iter().map(|g| g.len() as f64).sum();
    let grand = groups.iter().flat_map(|g| g.iter()).sum::<f64>() / total;
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for g in groups {
        let (n, m, ss) = moments(g);
        ss_between += n * (m - grand) * (m - grand);
        ss_within += ss;
    }
    let df_between = groups.len() as f64 - 1.0;
    let df_within = total - groups.len() as f64;
    let all_means_equal = {
        let m0 = moments(groups[0]).1;
        groups.iter().all(|g| moments(g).1 == m0)
    };
    if all_means_equal {
        return Ok(Anova { f: 0.0, df_between, df_within, p: 1.0 });
    }
    if ss_within == 0.0 {
        return Ok(Anova { f: f64::INFINITY, df_between, df_within, p: 0.0 });
    }
    let f = (ss_between / df_between) / (ss_within / df_within);
    Ok(Anova { f, df_between, df_within, p: f_survival(f, df_between, df_within)? })
}
