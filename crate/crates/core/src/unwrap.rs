//! Phase unwrapping: the 1D Itoh integrator and a quality-guided 2D flood
//! fill.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::Result;
use crate::fields::{wrap_angle, PhaseMap, ScalarField, Units};

#[derive(Debug, Clone)]
pub struct UnwrapResult {
    pub phase: PhaseMap,
    /// Row-major pixel indices in the order they were unwrapped.
    pub visited_order: Vec<usize>,
}

/// `out[n] = out[n-1] + wrap(w[n] - w[n-1])`, starting from `w[0]`.
pub fn unwrap_1d(w: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(w.len());
    let mut prev_w = match w.first() {
        Some(&v) => v,
        None => return out,
    };
    let mut acc = prev_w;
    out.push(acc);
    for &v in &w[1..] {
        acc += wrap_angle(v - prev_w);
        prev_w = v;
        out.push(acc);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    quality: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    // max-heap: higher quality first, then the smaller row-major index
    fn cmp(&self, other: &Self) -> Ordering {
        self.quality
            .total_cmp(&other.quality)
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn neighbors(i: usize, w: usize, h: usize) -> impl Iterator<Item = usize> {
    let (x, y) = (i / w, i % w);
    [
        (x > 0).then(|| i - w),
        (y > 0).then(|| i - 1),
        (y + 1 < w).then(|| i + 1),
        (x + 1 < h).then(|| i + w),
    ]
    .into_iter()
    .flatten()
}

/// Quality-guided unwrapping.
///
/// Starts at the highest-quality pixel and repeatedly takes the
/// highest-quality pixel on the frontier (ties go to the smaller row-major
/// index). Each pixel is integrated from its highest-quality neighbour that
/// is already unwrapped, so low-quality regions are reached last and absorb
/// any inconsistency.
pub fn unwrap_2d(w: &PhaseMap, quality: &ScalarField) -> Result<UnwrapResult> {
    let field = w.field();
    field.check_shape(quality, "wrapped phase vs quality")?;
    let (width, height) = (field.width(), field.height());
    let n = field.len();
    let wrapped = field.data();
    let q = quality.data();

    let seed = (0..n)
        .max_by(|&a, &b| q[a].total_cmp(&q[b]).then(b.cmp(&a)))
        .expect("fields are never empty");

    let mut out = vec![0.0; n];
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut heap = BinaryHeap::new();

    out[seed] = wrapped[seed];
    done[seed] = true;
    order.push(seed);
    for nb in neighbors(seed, width, height) {
        heap.push(Candidate {
            quality: q[nb],
            index: nb,
        });
    }

    while let Some(Candidate { index: p, .. }) = heap.pop() {
        if done[p] {
            continue;
        }
        let anchor = neighbors(p, width, height)
            .filter(|&nb| done[nb])
            .max_by(|&a, &b| q[a].total_cmp(&q[b]).then(b.cmp(&a)))
            .expect("frontier pixels touch an unwrapped pixel");
        out[p] = out[anchor] + wrap_angle(wrapped[p] - wrapped[anchor]);
        done[p] = true;
        order.push(p);
        for nb in neighbors(p, width, height) {
            if !done[nb] {
                heap.push(Candidate {
                    quality: q[nb],
                    index: nb,
                });
            }
        }
    }

    Ok(UnwrapResult {
        phase: PhaseMap::unwrapped(ScalarField::new(width, height, out, Units::Radians)?),
        visited_order: order,
    })
}
