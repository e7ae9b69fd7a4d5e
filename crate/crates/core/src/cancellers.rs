//! Digital self-interference cancellers built on Toeplitz basis matrices.
//!
//! Every matrix keeps only the rows `n = M-1 .. len-1`, so each row holds
//! `M` genuine past samples and no zero padding.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::impairments::pa::basis_signal;
use crate::linalg::{ls_solve, ComplexMatrix};
use crate::signal::{check_len, ComplexSignal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CancellerKind {
    Linear,
    WidelyLinear,
    NonlinearPH,
    JointAugmented,
}

impl CancellerKind {
    pub const ALL: [CancellerKind; 4] = [
        CancellerKind::Linear,
        CancellerKind::WidelyLinear,
        CancellerKind::NonlinearPH,
        CancellerKind::JointAugmented,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CancellerKind::Linear => "linear",
            CancellerKind::WidelyLinear => "widely-linear",
            CancellerKind::NonlinearPH => "nonlinear-ph",
            CancellerKind::JointAugmented => "joint",
        }
    }

    /// Coefficient count for memory `m` and order `p`.
    pub fn coefficient_count(self, m: usize, p: usize) -> usize {
        let branches = p.div_ceil(2);
        match self {
            CancellerKind::Linear => m,
            CancellerKind::WidelyLinear => 2 * m,
            CancellerKind::NonlinearPH => m * branches,
            CancellerKind::JointAugmented => 2 * m + m * (branches - 1),
        }
    }

    fn effective_order(self, p: usize) -> usize {
        match self {
            CancellerKind::Linear | CancellerKind::WidelyLinear => 1,
            _ => p,
        }
    }
}

impl fmt::Display for CancellerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CancellerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        CancellerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| invalid("kind", format!("unknown canceller `{s}`")))
    }
}

fn check_memory(len: usize, m: usize) -> Result<()> {
    if m == 0 {
        return Err(invalid("memory", "must be >= 1"));
    }
    if len < m {
        return Err(invalid("x", format!("signal of {len} samples is shorter than memory {m}")));
    }
    Ok(())
}

fn check_order(p: usize) -> Result<()> {
    if p == 0 || p.is_multiple_of(2) {
        return Err(invalid("order", format!("must be odd and >= 1, got {p}")));
    }
    Ok(())
}

fn toeplitz(x: &[Complex64], m: usize) -> ComplexMatrix {
    let rows = x.len() + 1 - m;
    let cols: Vec<Vec<Complex64>> = (0..m).map(|k| x[m - 1 - k..m - 1 - k + rows].to_vec()).collect();
    ComplexMatrix::from_columns(rows, &cols).expect("equal column lengths")
}

/// Rows `[x(n), x(n-1), ..., x(n-M+1)]` for `n = M-1 .. len-1`.
pub fn build_linear_matrix(x: &ComplexSignal, m: usize) -> Result<ComplexMatrix> {
    check_memory(x.len(), m)?;
    Ok(toeplitz(x.samples(), m))
}

/// `[X | X*]`
pub fn build_augmented_matrix(x: &ComplexSignal, m: usize) -> Result<ComplexMatrix> {
    let a = build_linear_matrix(x, m)?;
    let b = build_linear_matrix(&x.conj(), m)?;
    ComplexMatrix::hstack(&[&a, &b])
}

/// One Toeplitz block per odd `p <= order` on `|x|^(p-1) x`.
pub fn build_ph_matrix(x: &ComplexSignal, order: usize, m: usize, include_linear: bool) -> Result<ComplexMatrix> {
    check_order(order)?;
    check_memory(x.len(), m)?;
    let first = if include_linear { 1 } else { 3 };
    let blocks: Vec<ComplexMatrix> = (first..=order)
        .step_by(2)
        .map(|p| toeplitz(&basis_signal(p, x.samples()), m))
        .collect();
    if blocks.is_empty() {
        return Ok(ComplexMatrix::zeros(x.len() + 1 - m, 0));
    }
    ComplexMatrix::hstack(&blocks.iter().collect::<Vec<_>>())
}

/// `[X_aug | Psi]` with the linear PH block removed.
pub fn build_joint_matrix(x: &ComplexSignal, order: usize, m: usize) -> Result<ComplexMatrix> {
    check_order(order)?;
    if order < 3 {
        return Err(invalid("order", "joint canceller needs order >= 3"));
    }
    let aug = build_augmented_matrix(x, m)?;
    let psi = build_ph_matrix(x, order, m, false)?;
    ComplexMatrix::hstack(&[&aug, &psi])
}

pub fn basis_matrix(kind: CancellerKind, x: &ComplexSignal, m: usize, order: usize) -> Result<ComplexMatrix> {
    match kind {
        CancellerKind::Linear => build_linear_matrix(x, m),
        CancellerKind::WidelyLinear => build_augmented_matrix(x, m),
        CancellerKind::NonlinearPH => build_ph_matrix(x, order, m, true),
        CancellerKind::JointAugmented => build_joint_matrix(x, order, m),
    }
}

/// Fitted canceller. Coefficients are stacked block by block in matrix column order.
#[derive(Debug, Clone, PartialEq)]
pub struct CancellerEstimate {
    pub kind: CancellerKind,
    pub memory: usize,
    pub order: usize,
    /// Samples by which `y` lags `x`.
    pub delay: usize,
    pub coefficients: Vec<Complex64>,
}

impl CancellerEstimate {
    pub fn zeros(kind: CancellerKind, memory: usize, order: usize) -> Self {
        let order = kind.effective_order(order);
        Self {
            kind,
            memory,
            order,
            delay: 0,
            coefficients: vec![Complex64::new(0.0, 0.0); kind.coefficient_count(memory, order)],
        }
    }

    fn block(&self, i: usize) -> &[Complex64] {
        &self.coefficients[i * self.memory..(i + 1) * self.memory]
    }

    /// Direct linear response.
    pub fn h1(&self) -> &[Complex64] {
        self.block(0)
    }

    /// Conjugate response, for the widely-linear and joint kinds.
    pub fn h2(&self) -> Option<&[Complex64]> {
        match self.kind {
            CancellerKind::WidelyLinear | CancellerKind::JointAugmented => Some(self.block(1)),
            _ => None,
        }
    }

    /// Effective PH branch `p` for odd `p >= 3`.
    pub fn f_eff(&self, p: usize) -> Option<&[Complex64]> {
        if p < 3 || p.is_multiple_of(2) || p > self.order {
            return None;
        }
        let offset = match self.kind {
            CancellerKind::NonlinearPH => 0,
            CancellerKind::JointAugmented => 1,
            _ => return None,
        };
        Some(self.block((p - 1) / 2 + offset))
    }

    /// Plain-text coefficient file.
    pub fn to_text(&self) -> String {
        let mut s = String::from("# fdsim canceller coefficients v1\n");
        let _ = writeln!(s, "kind = {}", self.kind);
        let _ = writeln!(s, "memory = {}", self.memory);
        let _ = writeln!(s, "order = {}", self.order);
        let _ = writeln!(s, "delay = {}", self.delay);
        let _ = writeln!(s, "count = {}", self.coefficients.len());
        for c in &self.coefficients {
            let _ = writeln!(s, "{:.17e} {:.17e}", c.re, c.im);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let perr = |line: usize, reason: String| Error::Parse { line, reason };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, l)) if l.trim() == "# fdsim canceller coefficients v1" => {}
            _ => return Err(perr(1, "missing coefficient file header".into())),
        }
        let mut header = |key: &str| -> Result<String> {
            let (i, l) = lines.next().ok_or_else(|| perr(0, format!("missing `{key}`")))?;
            let (k, v) = l.split_once('=').ok_or_else(|| perr(i + 1, "expected `key = value`".into()))?;
            if k.trim() != key {
                return Err(perr(i + 1, format!("expected `{key}`, found `{}`", k.trim())));
            }
            Ok(v.trim().to_string())
        };
        let kind: CancellerKind = header("kind")?.parse()?;
        let num = |v: String, name: &str| v.parse::<usize>().map_err(|_| perr(0, format!("bad {name} `{v}`")));
        let memory = num(header("memory")?, "memory")?;
        let order = num(header("order")?, "order")?;
        let delay = num(header("delay")?, "delay")?;
        let count = num(header("count")?, "count")?;
        if count != kind.coefficient_count(memory, order) {
            return Err(perr(0, format!("count {count} does not match {kind} with memory {memory}, order {order}")));
        }
        let mut coefficients = Vec::with_capacity(count);
        for (i, l) in lines {
            let mut it = l.split_whitespace();
            let mut f = || -> Result<f64> {
                it.next()
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| perr(i + 1, "expected `re im`".into()))
            };
            coefficients.push(Complex64::new(f()?, f()?));
        }
        if coefficients.len() != count {
            return Err(Error::LengthMismatch {
                expected: count,
                actual: coefficients.len(),
            });
        }
        Ok(Self {
            kind,
            memory,
            order,
            delay,
            coefficients,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Least-squares fit of `kind` on aligned calibration frames.
pub fn estimate(
    kind: CancellerKind,
    x_cal: &ComplexSignal,
    y_cal: &ComplexSignal,
    m: usize,
    order: usize,
) -> Result<CancellerEstimate> {
    check_len(x_cal.len(), y_cal.len())?;
    let order = kind.effective_order(order);
    let a = basis_matrix(kind, x_cal, m, order)?;
    let theta = ls_solve(&a, &y_cal.samples()[m - 1..])?;
    Ok(CancellerEstimate {
        kind,
        memory: m,
        order,
        delay: 0,
        coefficients: theta,
    })
}

/// Bulk delay of `y` relative to `x`: the start `d` in `0..=max_delay` whose
/// `window` cross-correlation lags `d..d + window` hold the most energy.
pub fn find_delay(x: &ComplexSignal, y: &ComplexSignal, max_delay: usize, window: usize) -> Result<usize> {
    check_len(x.len(), y.len())?;
    let (xs, ys) = (x.samples(), y.samples());
    let lags = (max_delay + window.max(1)).min(xs.len());
    let energy: Vec<f64> = (0..lags)
        .map(|d| ys[d..].iter().zip(xs).map(|(a, b)| a * b.conj()).sum::<Complex64>().norm_sqr())
        .collect();
    let mut best = (0, -1.0);
    for d in 0..=max_delay.min(lags.saturating_sub(1)) {
        let e: f64 = energy[d..(d + window.max(1)).min(lags)].iter().sum();
        if e > best.1 {
            best = (d, e);
        }
    }
    Ok(best.0)
}

fn align(x: &ComplexSignal, y: &ComplexSignal, delay: usize) -> (ComplexSignal, ComplexSignal) {
    let n = x.len().saturating_sub(delay);
    (x.slice(0, n), y.slice(delay, delay + n))
}

/// Delay search followed by [`estimate`] on the aligned frames.
pub fn calibrate(
    kind: CancellerKind,
    x_cal: &ComplexSignal,
    y_cal: &ComplexSignal,
    m: usize,
    order: usize,
    max_delay: usize,
) -> Result<CancellerEstimate> {
    let delay = find_delay(x_cal, y_cal, max_delay, m)?;
    let (x, y) = align(x_cal, y_cal, delay);
    let mut est = estimate(kind, &x, &y, m, order)?;
    est.delay = delay;
    Ok(est)
}

/// Subtracts the regenerated SI. The output covers `y[delay + M - 1 ..]`.
pub fn cancel(est: &CancellerEstimate, x: &ComplexSignal, y: &ComplexSignal) -> Result<ComplexSignal> {
    check_len(x.len(), y.len())?;
    let expected = est.kind.coefficient_count(est.memory, est.order);
    if est.coefficients.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            actual: est.coefficients.len(),
        });
    }
    let (x, y) = align(x, y, est.delay);
    let a = basis_matrix(est.kind, &x, est.memory, est.order)?;
    let fit = a.mul_vec(&est.coefficients)?;
    let out = y.samples()[est.memory - 1..].iter().zip(fit).map(|(a, b)| a - b).collect();
    Ok(y.with_samples(out))
}
