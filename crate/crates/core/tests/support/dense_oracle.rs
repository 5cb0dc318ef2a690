//! Dense operator-product oracle shared by the propagation tests.
//!
//! Every free-evolution and waveplate operator is built as a full 2×2 matrix
//! (rotations via a truncated matrix-exponential series) and multiplied left
//! to right into one operator before it is applied to the input.

use fiberdd::noise::Segment;
use fiberdd::waveplate::{ErrorMode, RefractiveIndexProfile};
use fiberdd::{
    build_schedule, propagate, PhaseProfile, PureState, RotationAxis, Schedule, SequenceKind,
    WaveplateSpec,
};
use num_complex::Complex64 as C;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::f64::consts::{PI, TAU};

type M = [[C; 2]; 2];

pub const LAMBDA: f64 = 1550e-9;

fn mul(a: &M, b: &M) -> M {
    let mut r = [[C::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                r[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    r
}

fn pauli(axis: RotationAxis) -> M {
    let (o, l, i) = (C::new(0.0, 0.0), C::new(1.0, 0.0), C::new(0.0, 1.0));
    match axis {
        RotationAxis::X => [[o, l], [l, o]],
        RotationAxis::MinusX => [[o, -l], [-l, o]],
        RotationAxis::Y => [[o, -i], [i, o]],
        RotationAxis::Z => [[l, o], [o, -l]],
    }
}

/// exp(-i θ σ / 2) by scaling and squaring a 30-term Taylor series.
fn expm_rotation(axis: RotationAxis, theta: f64) -> M {
    let s = pauli(axis);
    let squarings = (theta.abs().max(1.0)).log2().ceil() as u32 + 4;
    let scale = -0.5 * theta / f64::from(2u32.pow(squarings));
    let a: M = [
        [s[0][0] * C::new(0.0, scale), s[0][1] * C::new(0.0, scale)],
        [s[1][0] * C::new(0.0, scale), s[1][1] * C::new(0.0, scale)],
    ];
    let mut term: M = [
        [C::new(1.0, 0.0), C::new(0.0, 0.0)],
        [C::new(0.0, 0.0), C::new(1.0, 0.0)],
    ];
    let mut sum = term;
    for k in 1..30 {
        term = mul(&term, &a);
        for r in term.iter_mut() {
            for c in r.iter_mut() {
                *c /= k as f64;
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        sum = mul(&sum, &sum);
    }
    sum
}

/// ∫Δn over [a, b] by walking the segment list from the start.
fn brute_integral(segments: &[Segment], a: f64, b: f64) -> f64 {
    let mut x = 0.0f64;
    let mut total = 0.0;
    for s in segments {
        let lo = x.max(a);
        let hi = (x + s.length).min(b);
        if hi > lo {
            total += s.delta_n * (hi - lo);
        }
        x += s.length;
    }
    total
}

pub fn oracle(
    input: &PureState,
    segments: &[Segment],
    schedule: &Schedule,
    axis_error: f64,
) -> [C; 2] {
    let mut op: M = [
        [C::new(1.0, 0.0), C::new(0.0, 0.0)],
        [C::new(0.0, 0.0), C::new(1.0, 0.0)],
    ];
    let mut x = 0.0f64;
    for e in &schedule.entries {
        let phase = TAU / LAMBDA * brute_integral(segments, x, e.position);
        op = mul(&expm_rotation(RotationAxis::Z, phase), &op);
        op = mul(&expm_rotation(e.axis, PI + axis_error), &op);
        x = e.position;
    }
    let phase = TAU / LAMBDA * brute_integral(segments, x, schedule.fiber_length);
    op = mul(&expm_rotation(RotationAxis::Z, phase), &op);
    let v = [input.alpha(), input.beta()];
    [
        op[0][0] * v[0] + op[0][1] * v[1],
        op[1][0] * v[0] + op[1][1] * v[1],
    ]
}

fn random_instance(rng: &mut StdRng) -> (Vec<Segment>, PureState, SequenceKind, usize) {
    let nseg = rng.random_range(1..=8);
    let segments: Vec<Segment> = (0..nseg)
        .map(|_| Segment {
            length: rng.random_range(0.1..3.0),
            delta_n: rng.random_range(-2e-7..2e-7),
        })
        .collect();
    let input = PureState::normalized(
        C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
        C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
    )
    .unwrap();
    let (kind, n) = match rng.random_range(0..3) {
        0 => (SequenceKind::FreeEvolution, 0),
        1 => (SequenceKind::Cpmg, 2 * rng.random_range(1..=2)),
        _ => (SequenceKind::Xy4, 4),
    };
    (segments, input, kind, n)
}

/// Largest amplitude deviation between `propagate` and the oracle over
/// `count` random small instances (≤ 8 segments, ≤ 4 waveplates, random
/// flip-angle errors in either error mode).
pub fn worst_random_deviation(seed: u64, count: usize) -> f64 {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let (segments, input, kind, n) = random_instance(&mut rng);
        let profile = PhaseProfile::from_segments(segments.clone()).unwrap();
        let schedule = build_schedule(kind, profile.total_length(), n).unwrap();
        let (plate, err) = if rng.random_bool(0.5) {
            let eps = rng.random_range(0.0..0.5);
            (WaveplateSpec::direct(RotationAxis::X, eps), eps * PI)
        } else {
            let kappa = rng.random_range(0.0..0.3);
            let spec = WaveplateSpec {
                axis: RotationAxis::X,
                profile: RefractiveIndexProfile::Rectangular,
                width: 2.0,
                error_mode: ErrorMode::Calibrated { kappa },
            };
            (spec, 2.0 * kappa)
        };
        let got = propagate(&input, &profile, &schedule, &plate, LAMBDA).unwrap();
        let want = oracle(&input, &segments, &schedule, err);
        worst = worst
            .max((got.alpha() - want[0]).norm())
            .max((got.beta() - want[1]).norm());
    }
    worst
}
