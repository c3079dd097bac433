//! Small dense vector helpers. Points and velocities are plain `&[f64]`
//! slices; hot loops reuse caller-provided scratch buffers.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

#[inline]
pub fn norm_sq(v: &[f64]) -> f64 {
    dot(v, v)
}

#[inline]
pub fn norm(v: &[f64]) -> f64 {
    norm_sq(v).sqrt()
}

#[inline]
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for i in 0..a.len() {
        let d = a[i] - b[i];
        s += d * d;
    }
    s
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[inline]
pub fn sub_into(a: &[f64], b: &[f64], out: &mut [f64]) {
    for i in 0..a.len() {
        out[i] = a[i] - b[i];
    }
}

/// out = a + t * (b - a)
#[inline]
pub fn lerp_into(a: &[f64], b: &[f64], t: f64, out: &mut [f64]) {
    for i in 0..a.len() {
        out[i] = a[i] + t * (b[i] - a[i]);
    }
}

#[inline]
pub fn scale_into(v: &[f64], s: f64, out: &mut [f64]) {
    for i in 0..v.len() {
        out[i] = s * v[i];
    }
}

#[inline]
pub fn scale_in_place(v: &mut [f64], s: f64) {
    for c in v {
        *c *= s;
    }
}

pub fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_ops() {
        let a = [3.0, 4.0];
        let b = [0.0, 0.0];
        assert_eq!(dist(&a, &b), 5.0);
        assert_eq!(norm(&a), 5.0);
        assert_eq!(dot(&a, &a), 25.0);
        let mut out = [0.0; 2];
        lerp_into(&b, &a, 0.5, &mut out);
        assert_eq!(out, [1.5, 2.0]);
    }
}
