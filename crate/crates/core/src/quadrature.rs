//! Gauss–Legendre quadrature: a globally adaptive composite 15-point rule and
//! a fixed composite rule for inner loops that integrate many smooth
//! functions over the same interval.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::{Error, Result};

/// Nonnegative abscissae and weights of the 15-point rule on `[-1, 1]`.
const GL15: [(f64, f64); 8] = [
    (0.0, 0.202_578_241_925_561_272_88),
    (0.201_194_093_997_434_522_3, 0.198_431_485_327_111_576_46),
    (0.394_151_347_077_563_369_9, 0.186_161_000_015_562_211_03),
    (0.570_972_172_608_538_847_54, 0.166_269_205_816_993_933_55),
    (0.724_417_731_360_170_047_42, 0.139_570_677_926_154_314_45),
    (0.848_206_583_410_427_216_2, 0.107_159_220_467_171_935_01),
    (0.937_273_392_400_705_904_31, 0.070_366_047_488_108_124_709),
    (0.987_992_518_020_485_428_49, 0.030_753_241_996_117_268_355),
];

/// Number of nodes per panel.
pub const PANEL_NODES: usize = 15;

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub max_panels: usize,
    /// Initial uniform panels are no wider than this, so narrow features far
    /// from the origin are not skipped by the first estimate.
    pub initial_width: f64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { abs_tol: 1e-9, max_panels: 10_000, initial_width: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub panels: usize,
}

/// 15-point Gauss–Legendre estimate on `[a, b]`.
pub fn gauss_legendre_15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = GL15[0].1 * f(c);
    for &(x, w) in &GL15[1..] {
        s += w * (f(c - h * x) + f(c + h * x));
    }
    s * h
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl Panel {
    fn new<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Self {
        let m = 0.5 * (a + b);
        let whole = gauss_legendre_15(f, a, b);
        let halves = gauss_legendre_15(f, a, m) + gauss_legendre_15(f, m, b);
        Panel { a, b, value: halves, error: (whole - halves).abs() }
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Adaptive composite Gauss–Legendre integration of `f` over finite `[a, b]`.
///
/// Each panel is estimated once whole and once as two halves; the panel with
/// the largest discrepancy is bisected until the summed discrepancy falls
/// below `abs_tol`. Running out of panels is an [`Error::Quadrature`] that
/// still carries the best estimate.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    opts: &QuadOptions,
) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::domain(alloc::format!("invalid interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadResult { value: 0.0, error_estimate: 0.0, panels: 0 });
    }
    let n0 = libm::ceil((b - a) / opts.initial_width).max(1.0) as usize;
    let width = (b - a) / n0 as f64;
    let mut heap: BinaryHeap<Panel> = (0..n0)
        .map(|i| {
            let lo = a + i as f64 * width;
            let hi = if i + 1 == n0 { b } else { lo + width };
            Panel::new(&mut f, lo, hi)
        })
        .collect();
    loop {
        let error: f64 = heap.iter().map(|p| p.error).sum();
        if error <= opts.abs_tol || heap.len() >= opts.max_panels {
            // sum in interval order so the value does not depend on heap layout
            let mut panels = heap.into_vec();
            panels.sort_by(|x, y| x.a.total_cmp(&y.a));
            let value = panels.iter().map(|p| p.value).sum();
            let res = QuadResult { value, error_estimate: error, panels: panels.len() };
            if error <= opts.abs_tol {
                return Ok(res);
            }
            return Err(Error::Quadrature {
                value: res.value,
                error_estimate: res.error_estimate,
                panels: res.panels,
            });
        }
        let worst = heap.pop().expect("at least one panel");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            // cannot bisect further at double precision
            heap.push(Panel { error: 0.0, ..worst });
            continue;
        }
        heap.push(Panel::new(&mut f, worst.a, m));
        heap.push(Panel::new(&mut f, m, worst.b));
    }
}

/// Fixed composite 15-point Gauss–Legendre rule on `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl CompositeRule {
    /// Uniform panels no wider than `max_width`.
    pub fn new(a: f64, b: f64, max_width: f64) -> Self {
        let n = libm::ceil((b - a) / max_width).max(1.0) as usize;
        let width = (b - a) / n as f64;
        let mut nodes = Vec::with_capacity(n * PANEL_NODES);
        let mut weights = Vec::with_capacity(n * PANEL_NODES);
        for i in 0..n {
            let c = a + (i as f64 + 0.5) * width;
            let h = 0.5 * width;
            for &(x, w) in GL15.iter().rev() {
                if x > 0.0 {
                    nodes.push(c - h * x);
                    weights.push(w * h);
                }
            }
            for &(x, w) in GL15.iter() {
                nodes.push(c + h * x);
                weights.push(w * h);
            }
        }
        CompositeRule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}
