//! Test-only oracles, independent of the solver code paths.
#![allow(dead_code)]

use epipole_core::{generate_scene, CorrSet, HomPoint2, Scene, SceneConfig, SceneMode};
use nalgebra::{Matrix3, Vector3};

pub fn facing(seed: u64) -> Scene {
    generate_scene(&SceneConfig::random(SceneMode::Facing, seed)).expect("facing scene")
}

pub fn lateral(seed: u64) -> Scene {
    generate_scene(&SceneConfig::random(SceneMode::Lateral, seed)).expect("lateral scene")
}

pub fn s1() -> Scene {
    generate_scene(&SceneConfig::s1()).expect("S1 scene")
}

/// `|a - b| / |b|` on pixel coordinates; infinite when either is ideal.
pub fn rel_err(a: &HomPoint2, b: &HomPoint2) -> f64 {
    match (a.to_pixel(), b.to_pixel()) {
        (Some(a), Some(b)) => (a[0] - b[0]).hypot(a[1] - b[1]) / b[0].hypot(b[1]),
        _ => f64::INFINITY,
    }
}

pub fn px_err(a: &HomPoint2, b: &HomPoint2) -> f64 {
    match (a.to_pixel(), b.to_pixel()) {
        (Some(a), Some(b)) => (a[0] - b[0]).hypot(a[1] - b[1]),
        _ => f64::INFINITY,
    }
}

/// Similarity moving the centroid to the origin with unit mean distance.
pub fn similarity(points: &[HomPoint2]) -> Matrix3<f64> {
    let px: Vec<[f64; 2]> = points.iter().map(|p| p.to_pixel().unwrap()).collect();
    let n = px.len() as f64;
    let cx = px.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = px.iter().map(|p| p[1]).sum::<f64>() / n;
    let md = px.iter().map(|p| (p[0] - cx).hypot(p[1] - cy)).sum::<f64>() / n;
    let s = 1.0 / md;
    Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0)
}

fn bracket(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> f64 {
    a.dot(&b.cross(c))
}

fn sym_outer(l: &Vector3<f64>, m: &Vector3<f64>) -> Matrix3<f64> {
    let o = l * m.transpose();
    (o + o.transpose()) * 0.5
}

/// Conic of `e'` for one quad, built as a difference of two line pairs:
/// `A (L_ik x)(L_jl x) - B (L_ij x)(L_kl x)` with `A = |e pi pj||e pk pl|`,
/// `B = |e pi pk||e pj pl|` and `L_ab = p'a x p'b`.
pub fn line_pair_conic(
    e: &Vector3<f64>,
    p: &[Vector3<f64>],
    q: &[Vector3<f64>],
    [i, j, k, l]: [usize; 4],
) -> Matrix3<f64> {
    let a = bracket(e, &p[i], &p[j]) * bracket(e, &p[k], &p[l]);
    let b = bracket(e, &p[i], &p[k]) * bracket(e, &p[j], &p[l]);
    let line = |x: usize, y: usize| q[x].cross(&q[y]);
    sym_outer(&line(i, k), &line(j, l)) * a - sym_outer(&line(i, j), &line(k, l)) * b
}

/// Real intersections of two conics by the pencil method: a degenerate
/// member `C1 + λ C2` is split into two lines, each cut with `C1`.
pub fn conic_intersections(c1: &Matrix3<f64>, c2: &Matrix3<f64>) -> Vec<Vector3<f64>> {
    let c1 = c1 / c1.norm();
    let c2 = c2 / c2.norm();
    // det(C1 + λ C2) = 0  <=>  -λ is an eigenvalue of C2^-1 C1.
    let (base, other, flip) = match c2.try_inverse() {
        Some(inv) => (inv * c1, c1, false),
        None => (c1.try_inverse().expect("both conics singular") * c2, c2, true),
    };
    let mut best: Option<(f64, Vec<Vector3<f64>>)> = None;
    for ev in base.complex_eigenvalues().iter() {
        if ev.im.abs() > 1e-9 * ev.re.abs().max(1.0) {
            continue;
        }
        let lambda = -ev.re;
        let d = if flip { c2 + c1 * lambda } else { c1 + c2 * lambda };
        let Some((l, m)) = split_line_pair(&d) else {
            continue;
        };
        let mut pts = line_conic(&l, &other);
        pts.extend(line_conic(&m, &other));
        let sv = d.singular_values();
        let mut s: Vec<f64> = sv.iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        // Prefer the cleanest line pair: large sigma2, tiny sigma3.
        let score = s[1] / s[0];
        if best.as_ref().map_or(true, |b| score > b.0) {
            best = Some((score, pts));
        }
    }
    best.map(|b| b.1).unwrap_or_default()
}

fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

fn adjugate(m: &Matrix3<f64>) -> Matrix3<f64> {
    // Rows of the adjugate are cross products of the columns.
    let (c0, c1, c2) = (m.column(0), m.column(1), m.column(2));
    Matrix3::from_rows(&[
        c1.cross(&c2).transpose(),
        c2.cross(&c0).transpose(),
        c0.cross(&c1).transpose(),
    ])
}

/// Splits a rank-2 symmetric matrix `sym(l mᵀ)` into its two lines.
fn split_line_pair(d: &Matrix3<f64>) -> Option<(Vector3<f64>, Vector3<f64>)> {
    // adj(sym(l mᵀ)) = -(l x m)(l x m)ᵀ / 4.
    let b = adjugate(d);
    let (mut i, mut big) = (0, 0.0);
    for k in 0..3 {
        if -b[(k, k)] > big {
            big = -b[(k, k)];
            i = k;
        }
    }
    if big <= 0.0 {
        return None;
    }
    let p = b.column(i) / (-b[(i, i)]).sqrt();
    // d + [p]x is rank one, proportional to l mᵀ.
    let r = d + skew(&p);
    let (mut rr, mut cc, mut amax) = (0, 0, 0.0);
    for x in 0..3 {
        for y in 0..3 {
            if r[(x, y)].abs() > amax {
                amax = r[(x, y)].abs();
                rr = x;
                cc = y;
            }
        }
    }
    if amax == 0.0 {
        return None;
    }
    Some((r.row(rr).transpose(), r.column(cc).into_owned()))
}

/// Real points where line `l` meets conic `c`.
fn line_conic(l: &Vector3<f64>, c: &Matrix3<f64>) -> Vec<Vector3<f64>> {
    // Two points spanning the line.
    let k = l.iamin();
    let mut axis = Vector3::zeros();
    axis[k] = 1.0;
    let u = l.cross(&axis).normalize();
    let v = l.cross(&u).normalize();
    let a = u.dot(&(c * u));
    let b = u.dot(&(c * v));
    let cc = v.dot(&(c * v));
    // a s² + 2 b s t + cc t² = 0.
    let disc = b * b - a * cc;
    if disc < 0.0 {
        return Vec::new();
    }
    // Roots s/t = r/a and cc/r, written projectively so a = 0 or r = 0
    // still give valid points.
    let r = -(b + b.signum() * disc.sqrt());
    let mut out = vec![(u * r + v * a).normalize()];
    if r != 0.0 {
        out.push((u * cc + v * r).normalize());
    }
    out
}

fn proj_dist(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let (a, b) = (a.normalize(), b.normalize());
    (a - b).norm().min((a + b).norm())
}

/// Five-point `e'` by brute force: intersect the conics of quads
/// `{0,1,2,3}` and `{0,1,2,4}` and drop the three shared image-2 points.
/// `None` when the intersection does not isolate a fourth point.
pub fn five_point_oracle(e: &HomPoint2, corr: &CorrSet) -> Option<HomPoint2> {
    let t1 = similarity(&corr.points1());
    let t2 = similarity(&corr.points2());
    let p: Vec<Vector3<f64>> = corr.pairs.iter().map(|c| (t1 * c.p.0).normalize()).collect();
    let q: Vec<Vector3<f64>> = corr.pairs.iter().map(|c| (t2 * c.p_prime.0).normalize()).collect();
    let en = (t1 * e.0).normalize();
    let c1 = line_pair_conic(&en, &p, &q, [0, 1, 2, 3]);
    let c2 = line_pair_conic(&en, &p, &q, [0, 1, 2, 4]);
    let pts = conic_intersections(&c1, &c2);
    let far = |x: &Vector3<f64>| (0..3).map(|s| proj_dist(x, &q[s])).fold(f64::INFINITY, f64::min);
    let best = pts.iter().max_by(|a, b| far(a).total_cmp(&far(b)))?;
    if far(best) < 1e-6 {
        return None;
    }
    let back = t2.try_inverse()? * best;
    Some(HomPoint2(back).dehomogenized())
}
