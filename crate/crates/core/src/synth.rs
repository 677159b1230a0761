//! Synthetic CA traces and rigid motions, for tests, benchmarks and demos.

use rand::Rng;

use crate::structure::CaTrace;

/// Ideal α-helix: 100° turn and 1.5 Å rise per residue, 2.3 Å radius,
/// with uniform coordinate noise in `[-jitter, jitter]`.
pub fn helix<R: Rng>(id: &str, n: usize, jitter: f64, rng: &mut R) -> CaTrace {
    let coords = (0..n)
        .map(|i| {
            let t = (100.0 * i as f64).to_radians();
            noisy([2.3 * t.cos(), 2.3 * t.sin(), 1.5 * i as f64], jitter, rng)
        })
        .collect();
    CaTrace::new(id, coords).expect("helix needs n >= 2")
}

/// Extended β-strand: 3.3 Å rise per residue with a ±0.9 Å zig-zag.
pub fn strand<R: Rng>(id: &str, n: usize, jitter: f64, rng: &mut R) -> CaTrace {
    let coords = (0..n)
        .map(|i| {
            let zig = if i % 2 == 0 { 0.9 } else { -0.9 };
            noisy([3.3 * i as f64, zig, 0.0], jitter, rng)
        })
        .collect();
    CaTrace::new(id, coords).expect("strand needs n >= 2")
}

/// Up-and-down helical bundle: `helices` antiparallel helices of
/// `helix_len` residues, axes 10 Å apart, joined by three-residue loops.
pub fn helix_bundle<R: Rng>(id: &str, helices: usize, helix_len: usize, jitter: f64, rng: &mut R) -> CaTrace {
    let segments = (0..helices)
        .map(|h| {
            let up = h % 2 == 0;
            (0..helix_len)
                .map(|i| {
                    let t = (100.0 * i as f64).to_radians();
                    let z = 1.5 * i as f64;
                    [10.0 * h as f64 + 2.3 * t.cos(), 2.3 * t.sin(), if up { z } else { 1.5 * (helix_len - 1) as f64 - z }]
                })
                .collect()
        })
        .collect();
    join_segments(id, segments, 3, jitter, rng)
}

/// β-meander: `strands` antiparallel strands of `strand_len` residues,
/// 4.8 Å apart, joined by two-residue turns.
pub fn beta_meander<R: Rng>(id: &str, strands: usize, strand_len: usize, jitter: f64, rng: &mut R) -> CaTrace {
    let segments = (0..strands)
        .map(|s| {
            (0..strand_len)
                .map(|i| {
                    let x = 3.3 * if s % 2 == 0 { i } else { strand_len - 1 - i } as f64;
                    let zig = if i % 2 == 0 { 0.9 } else { -0.9 };
                    [x, 4.8 * s as f64, zig]
                })
                .collect()
        })
        .collect();
    join_segments(id, segments, 2, jitter, rng)
}

/// Concatenates segments, inserting `loop_len` straight-line residues
/// between consecutive ones, then applies jitter.
fn join_segments<R: Rng>(
    id: &str,
    segments: Vec<Vec<[f64; 3]>>,
    loop_len: usize,
    jitter: f64,
    rng: &mut R,
) -> CaTrace {
    let mut coords: Vec<[f64; 3]> = Vec::new();
    for seg in segments {
        if let (Some(&a), Some(&b)) = (coords.last(), seg.first()) {
            for k in 1..=loop_len {
                let t = k as f64 / (loop_len + 1) as f64;
                coords.push(std::array::from_fn(|d| a[d] + t * (b[d] - a[d])));
            }
        }
        coords.extend(seg);
    }
    let coords = coords.into_iter().map(|p| noisy(p, jitter, rng)).collect();
    CaTrace::new(id, coords).expect("segments must hold at least two residues")
}

/// Random walk with 3.8 Å steps, a stand-in for an arbitrary fold.
pub fn random_walk<R: Rng>(id: &str, n: usize, rng: &mut R) -> CaTrace {
    let mut p = [0.0; 3];
    let mut coords = Vec::with_capacity(n);
    for _ in 0..n {
        coords.push(p);
        let d = unit_vector(rng);
        for k in 0..3 {
            p[k] += 3.8 * d[k];
        }
    }
    CaTrace::new(id, coords).expect("random walk needs n >= 2")
}

fn noisy<R: Rng>(p: [f64; 3], jitter: f64, rng: &mut R) -> [f64; 3] {
    if jitter == 0.0 {
        return p;
    }
    p.map(|v| v + rng.gen_range(-jitter..=jitter))
}

fn unit_vector<R: Rng>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if norm > 1e-3 && norm <= 1.0 {
            return v.map(|x| x / norm);
        }
    }
}

/// Rotation matrix and translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidMotion {
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl RigidMotion {
    /// Uniformly random rotation (unit quaternion) and a translation in
    /// `[-max_shift, max_shift]^3`.
    pub fn random<R: Rng>(rng: &mut R, max_shift: f64) -> Self {
        let q = loop {
            let q: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 1e-3 && n <= 1.0 {
                break q.map(|x| x / n);
            }
        };
        let [w, x, y, z] = q;
        let rotation = [
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
            [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
            [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
        ];
        let translation = std::array::from_fn(|_| rng.gen_range(-max_shift..=max_shift));
        Self { rotation, translation }
    }

    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|i| {
            self.translation[i] + (0..3).map(|k| self.rotation[i][k] * p[k]).sum::<f64>()
        })
    }

    pub fn apply_trace(&self, trace: &CaTrace) -> CaTrace {
        let coords = trace.coords().iter().map(|&p| self.apply(p)).collect();
        CaTrace::new(trace.id(), coords).expect("rigid motion keeps a valid trace valid")
    }
}

/// Renders a trace as PDB `ATOM` records (one glycine CA per residue).
pub fn to_pdb(trace: &CaTrace) -> String {
    let mut out = String::new();
    for (i, c) in trace.coords().iter().enumerate() {
        out.push_str(&format!(
            "ATOM  {:>5}  CA  GLY A{:>4}    {:>8.3}{:>8.3}{:>8.3}  1.00  0.00           C\n",
            i + 1,
            i + 1,
            c[0],
            c[1],
            c[2]
        ));
    }
    out.push_str("END\n");
    out
}
