use std::collections::HashMap;
use std::f64::consts::{PI, SQRT_2};

use ndarray::Array2;

use super::NucleusObservation;

/// Floor applied to traced and hull perimeters so ratios stay finite on
/// masks of one or two pixels.
pub const MIN_PERIMETER: f64 = 4.0;

/// Clockwise neighbourhood (row, col) offsets, starting west.
const DIRS: [(isize, isize); 8] = [
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeStats {
    pub area: f64,
    pub perimeter: f64,
    pub hull_perimeter: f64,
    pub roughness: f64,
    pub eccentricity: f64,
    pub circularity: f64,
    pub shape_factor: f64,
}

fn is_set(mask: &Array2<bool>, r: isize, c: isize) -> bool {
    r >= 0
        && c >= 0
        && (r as usize) < mask.nrows()
        && (c as usize) < mask.ncols()
        && mask[[r as usize, c as usize]]
}

/// Moore-neighbour trace of the outer contour of the first set pixel's
/// component (raster order). Returns the contour pixels and its length with
/// unit axial and `sqrt(2)` diagonal steps.
pub fn boundary_trace(mask: &Array2<bool>) -> (Vec<(usize, usize)>, f64) {
    let Some(((r0, c0), _)) = mask.indexed_iter().find(|(_, &m)| m) else {
        return (Vec::new(), 0.0);
    };
    let mut p = (r0 as isize, c0 as isize);
    // direction from p to the pixel we arrived from; west of the first pixel
    // is unset because it precedes it in raster order
    let mut back = 0usize;
    let mut seen: HashMap<((isize, isize), usize), usize> = HashMap::new();
    let mut lengths = vec![0.0];
    let mut path = vec![p];
    loop {
        if let Some(&first) = seen.get(&(p, back)) {
            let total = lengths.last().unwrap() - lengths[first];
            let pixels = path[first..path.len() - 1]
                .iter()
                .map(|&(r, c)| (r as usize, c as usize))
                .collect();
            return (pixels, total);
        }
        seen.insert((p, back), lengths.len() - 1);
        let Some(k) = (1..=8).find(|k| {
            let (dr, dc) = DIRS[(back + k) % 8];
            is_set(mask, p.0 + dr, p.1 + dc)
        }) else {
            return (vec![(r0, c0)], 0.0);
        };
        let d = (back + k) % 8;
        let q = (p.0 + DIRS[d].0, p.1 + DIRS[d].1);
        let (pr, pc) = DIRS[(d + 7) % 8];
        let prev = (p.0 + pr - q.0, p.1 + pc - q.1);
        back = DIRS
            .iter()
            .position(|&o| o == prev)
            .expect("adjacent cells");
        let step = if d.is_multiple_of(2) { 1.0 } else { SQRT_2 };
        lengths.push(lengths.last().unwrap() + step);
        path.push(q);
        p = q;
    }
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Convex hull (monotone chain), counter-clockwise without collinear points.
pub fn convex_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(f64, f64)>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2
                && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

fn polygon_perimeter(poly: &[(f64, f64)]) -> f64 {
    match poly.len() {
        0 | 1 => 0.0,
        n => (0..n)
            .map(|i| {
                let (a, b) = (poly[i], poly[(i + 1) % n]);
                (a.0 - b.0).hypot(a.1 - b.1)
            })
            .sum(),
    }
}

/// Full major and minor axis lengths of the ellipse with the mask's second
/// moments. Each pixel is treated as a unit square, which adds `1/12` to
/// both variances (so a `w x h` rectangle has axes proportional to `w`, `h`).
pub fn moment_axes(mask: &Array2<bool>) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = mask
        .indexed_iter()
        .filter(|(_, &m)| m)
        .map(|((r, c), _)| (r as f64, c as f64))
        .collect();
    let n = pts.len() as f64;
    let (mr, mc) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), &(r, c)| (a + r / n, b + c / n));
    let (mut srr, mut scc, mut src) = (1.0 / 12.0, 1.0 / 12.0, 0.0);
    for &(r, c) in &pts {
        srr += (r - mr) * (r - mr) / n;
        scc += (c - mc) * (c - mc) / n;
        src += (r - mr) * (c - mc) / n;
    }
    let half_trace = 0.5 * (srr + scc);
    let disc = (0.25 * (srr - scc).powi(2) + src * src).sqrt();
    let hi = half_trace + disc;
    let lo = (half_trace - disc).max(0.0);
    (4.0 * hi.sqrt(), 4.0 * lo.sqrt())
}

/// Area, traced perimeter, hull-based ratios and axis ratio of a mask.
pub fn shape_attributes(obs: &NucleusObservation) -> (ShapeStats, Vec<String>) {
    let mask = &obs.mask;
    let mut warnings = Vec::new();
    let area = obs.area() as f64;
    let (_, mut perimeter) = boundary_trace(mask);
    let edge_pixels: Vec<(f64, f64)> = mask
        .indexed_iter()
        .filter(|&((r, c), &m)| {
            let (r, c) = (r as isize, c as isize);
            m && [(0, 1), (1, 0), (0, -1), (-1, 0)]
                .iter()
                .any(|&(dr, dc)| !is_set(mask, r + dr, c + dc))
        })
        .map(|((r, c), _)| (c as f64, r as f64))
        .collect();
    let mut hull_perimeter = polygon_perimeter(&convex_hull(&edge_pixels));
    if perimeter < MIN_PERIMETER || hull_perimeter < MIN_PERIMETER {
        warnings.push(format!(
            "nucleus of {area} px has perimeter {perimeter:.3} / hull {hull_perimeter:.3}; \
             using minimum {MIN_PERIMETER}"
        ));
        perimeter = perimeter.max(MIN_PERIMETER);
        hull_perimeter = hull_perimeter.max(MIN_PERIMETER);
    }
    let (major, minor) = moment_axes(mask);
    let stats = ShapeStats {
        area,
        perimeter,
        hull_perimeter,
        roughness: hull_perimeter / perimeter,
        eccentricity: minor / major,
        circularity: 4.0 * PI * area / (perimeter * perimeter),
        shape_factor: 4.0 * PI * area / (hull_perimeter * hull_perimeter),
    };
    (stats, warnings)
}

/// Rasterizes an ellipse with the given semi-axes (pixels) rotated by
/// `angle` radians, centred in the smallest odd square grid that holds it
/// with a one-pixel empty border.
pub fn ellipse_mask(semi_major: f64, semi_minor: f64, angle: f64) -> Array2<bool> {
    let a = semi_major.max(0.5);
    let b = semi_minor.max(0.5);
    let half = a.max(b).ceil() as usize + 1;
    let size = 2 * half + 1;
    let (s, c) = angle.sin_cos();
    Array2::from_shape_fn((size, size), |(r, col)| {
        let x = col as f64 - half as f64;
        let y = r as f64 - half as f64;
        let u = x * c + y * s;
        let v = -x * s + y * c;
        (u / a).powi(2) + (v / b).powi(2) <= 1.0
    })
}
