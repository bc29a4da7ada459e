//! RGB <-> HSV conversion with an integer-exact round trip.
//!
//! V is max(R,G,B) on the 0..=255 scale, S = (max-min)/max in [0,1], H in
//! [0,360) degrees. The hue is computed as a single correctly-rounded
//! division of integers (60 * sector_numerator / delta), and the inverse
//! recovers the integer numerator by rounding, so
//! `hsv_to_rgb(rgb_to_hsv(p)) == p` holds for all 2^24 inputs.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hsv {
    /// Degrees in [0, 360); 0 for achromatic pixels.
    pub h: f64,
    /// Saturation in [0, 1].
    pub s: f64,
    /// Intensity: max(R, G, B), kept on the 8-bit scale.
    pub v: u8,
}

pub fn rgb_to_hsv(p: [u8; 3]) -> Hsv {
    let (r, g, b) = (p[0] as i64, p[1] as i64, p[2] as i64);
    let v = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = v - min;
    if delta == 0 {
        return Hsv {
            h: 0.0,
            s: 0.0,
            v: v as u8,
        };
    }
    let s = delta as f64 / v as f64;
    // sector numerator n in [0, 6*delta): h = 60 * n / delta
    let n = if r == v {
        if g >= b {
            g - b
        } else {
            6 * delta - (b - g)
        }
    } else if g == v {
        2 * delta + (b - r)
    } else {
        4 * delta + (r - g)
    };
    Hsv {
        h: 60.0 * n as f64 / delta as f64,
        s,
        v: v as u8,
    }
}

pub fn hsv_to_rgb(hsv: Hsv) -> [u8; 3] {
    let v = hsv.v as i64;
    if v == 0 {
        return [0, 0, 0];
    }
    let delta = (hsv.s * v as f64).round() as i64;
    let delta = delta.clamp(0, v);
    if delta == 0 {
        return [hsv.v; 3];
    }
    let min = v - delta;
    let h = hsv.h.rem_euclid(360.0);
    let mut n = (h * delta as f64 / 60.0).round() as i64;
    n %= 6 * delta; // h just below 360 rounds up to the red sector
    let (k, m) = (n / delta, n % delta);
    let (r, g, b) = match k {
        0 => (v, min + m, min),
        1 => (min + (delta - m), v, min),
        2 => (min, v, min + m),
        3 => (min, min + (delta - m), v),
        4 => (min + m, min, v),
        _ => (v, min, min + (delta - m)),
    };
    [r as u8, g as u8, b as u8]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn pure_red() {
        let hsv = rgb_to_hsv([255, 0, 0]);
        assert_eq!(hsv.h, 0.0);
        assert_eq!(hsv.s, 1.0);
        assert_eq!(hsv.v, 255);
    }

    #[test]
    fn gray_is_achromatic() {
        let hsv = rgb_to_hsv([128, 128, 128]);
        assert_eq!(hsv.h, 0.0);
        assert_eq!(hsv.s, 0.0);
        assert_eq!(hsv.v, 128);
    }

    #[test]
    fn primary_and_secondary_hues() {
        assert_eq!(rgb_to_hsv([0, 255, 0]).h, 120.0);
        assert_eq!(rgb_to_hsv([0, 0, 255]).h, 240.0);
        assert_eq!(rgb_to_hsv([255, 255, 0]).h, 60.0);
        assert_eq!(rgb_to_hsv([0, 255, 255]).h, 180.0);
        assert_eq!(rgb_to_hsv([255, 0, 255]).h, 300.0);
    }

    #[test]
    fn sampled_round_trip_is_exact() {
        let mut rng = Rng::new(99);
        for _ in 0..20_000 {
            let p = [
                rng.below(256) as u8,
                rng.below(256) as u8,
                rng.below(256) as u8,
            ];
            assert_eq!(hsv_to_rgb(rgb_to_hsv(p)), p, "round trip failed for {p:?}");
        }
    }

    #[test]
    fn boundary_round_trips() {
        for p in [
            [0, 0, 0],
            [255, 255, 255],
            [255, 254, 254],
            [1, 0, 0],
            [0, 1, 2],
            [254, 255, 253],
            [127, 128, 129],
            [255, 0, 1],
            [255, 1, 0],
        ] {
            assert_eq!(hsv_to_rgb(rgb_to_hsv(p)), p);
        }
    }

    #[test]
    fn hue_wraps_at_360() {
        let p = hsv_to_rgb(Hsv {
            h: 360.0,
            s: 1.0,
            v: 255,
        });
        assert_eq!(p, [255, 0, 0]);
    }
}
