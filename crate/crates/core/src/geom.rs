//! Small fixed-size vector helpers. Points always carry three slots; in two
//! dimensions the last slot is zero.

pub type Point = [f64; 3];
pub type Mat = [[f64; 3]; 3];

pub const ORIGIN: Point = [0.0; 3];

#[inline]
pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(a: Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

/// Unit vector along `a`; the zero vector maps to itself.
pub fn normalize(a: Point) -> Point {
    let n = norm(a);
    if n == 0.0 {
        a
    } else {
        scale(a, 1.0 / n)
    }
}

pub fn cross(a: Point, b: Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Unit vector along axis `i`.
pub fn axis(i: usize) -> Point {
    let mut e = ORIGIN;
    e[i] = 1.0;
    e
}

/// Embed a slice of length 2 or 3 as a point.
pub fn from_slice(v: &[f64]) -> Point {
    let mut p = ORIGIN;
    for (a, b) in p.iter_mut().zip(v) {
        *a = *b;
    }
    p
}
