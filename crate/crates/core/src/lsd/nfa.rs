use crate::lsd::gradient::GradientField;
use crate::lsd::region::{is_aligned, OrientedRect};

/// ln(Gamma(x)) via Lanczos for small x, Windschitl for large: the usual
/// split that keeps absolute error tiny across the whole range used here.
pub(crate) fn log_gamma(x: f64) -> f64 {
    if x > 15.0 {
        // Windschitl
        0.918938533204673 + (x - 0.5) * x.ln() - x
            + 0.5 * x * (x * (1.0 / x).sinh() + 1.0 / (810.0 * x.powi(6))).ln()
    } else {
        // Lanczos
        const Q: [f64; 7] = [
            75122.6331530,
            80916.6278952,
            36308.2951477,
            8687.24529705,
            1168.92649479,
            83.8676043424,
            2.50662827511,
        ];
        let mut a = (x + 0.5) * (x + 5.5).ln() - (x + 5.5);
        let mut b = 0.0;
        for (n, &q) in Q.iter().enumerate() {
            a -= (x + n as f64).ln();
            b += q * x.powi(n as i32);
        }
        a + b.ln()
    }
}

/// -log10 of `NT * P[Bin(n, p) >= k]`, the a-contrario meaningfulness of
/// observing k aligned points among n. Larger means rarer under noise.
/// The tail sum stops once the truncation error is provably below 10%,
/// which is plenty for a quantity compared on a log10 scale.
pub(crate) fn nfa_value(n: usize, k: usize, p: f64, log_nt: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    if n == 0 || k == 0 {
        return -log_nt;
    }
    if n == k {
        return -log_nt - n as f64 * p.log10();
    }

    let nf = n as f64;
    let kf = k as f64;
    let p_term = p / (1.0 - p);

    // first term of the tail, in logs to survive large n
    let log1term = log_gamma(nf + 1.0) - log_gamma(kf + 1.0) - log_gamma(nf - kf + 1.0)
        + kf * p.ln()
        + (nf - kf) * (1.0 - p).ln();
    let mut term = log1term.exp();
    if term == 0.0 {
        // underflow: the first term dominates the tail
        if kf > nf * p {
            return -log1term / std::f64::consts::LN_10 - log_nt;
        }
        return -log_nt;
    }

    let mut tail = term;
    for i in k + 1..=n {
        let bin_term = (n - i + 1) as f64 / i as f64;
        let mult = bin_term * p_term;
        term *= mult;
        tail += term;
        if bin_term < 1.0 {
            // remaining terms are bounded by a geometric series
            let err = term * ((1.0 - mult.powi((n - i + 1) as i32)) / (1.0 - mult) - 1.0);
            if err < 0.1 * (-tail.log10() - log_nt).abs() * tail {
                break;
            }
        }
    }
    -tail.log10() - log_nt
}

/// Number-of-tests exponent for a w x h field. The trailing term accounts
/// for the handful of tolerance variants each candidate may be tested with.
pub(crate) fn log_num_tests(w: usize, h: usize) -> f64 {
    5.0 * ((w as f64).log10() + (h as f64).log10()) / 2.0 + 11.0f64.log10()
}

/// Evaluate -log10(NFA) of one oriented rectangle: scan its bounding box,
/// count covered grid points and those whose level line aligns with the
/// rectangle axis within `rect.prec`.
pub(crate) fn rect_nfa(rect: &OrientedRect, field: &GradientField, log_nt: f64) -> f64 {
    let (dx, dy) = (rect.theta.cos(), rect.theta.sin());
    let half_len = rect.length() / 2.0;
    let half_width = rect.width / 2.0;
    let mx = (rect.x1 + rect.x2) / 2.0;
    let my = (rect.y1 + rect.y2) / 2.0;

    let pad = half_len.abs() + half_width.abs() + 2.0;
    let x0 = ((mx - pad).floor().max(0.0)) as usize;
    let y0 = ((my - pad).floor().max(0.0)) as usize;
    let x1 = ((mx + pad).ceil() as usize).min(field.width() - 1);
    let y1 = ((my + pad).ceil() as usize).min(field.height() - 1);

    let mut total = 0usize;
    let mut aligned = 0usize;
    for y in y0..=y1 {
        for x in x0..=x1 {
            let l = (x as f64 - mx) * dx + (y as f64 - my) * dy;
            let t = -(x as f64 - mx) * dy + (y as f64 - my) * dx;
            if l.abs() > half_len || t.abs() > half_width {
                continue;
            }
            total += 1;
            if field.is_valid(x, y)
                && is_aligned(field.level_line_angle(x, y), rect.theta, rect.prec)
            {
                aligned += 1;
            }
        }
    }
    nfa_value(total, aligned, rect.p, log_nt)
}

/// Try the rectangle as fitted plus a fixed family of sharper-tolerance and
/// narrower variants, returning the best -log10(NFA) and the variant that
/// achieved it. The candidate set never depends on the acceptance threshold,
/// so loosening epsilon can only ever add segments to the output.
pub(crate) fn improve_rect(
    rect: &OrientedRect,
    field: &GradientField,
    log_nt: f64,
) -> (OrientedRect, f64) {
    let mut best = rect.clone();
    let mut best_value = rect_nfa(rect, field, log_nt);

    let consider = |candidate: OrientedRect, best: &mut OrientedRect, best_value: &mut f64| {
        let v = rect_nfa(&candidate, field, log_nt);
        if v > *best_value {
            *best_value = v;
            *best = candidate;
        }
    };

    // sharper angle tolerance
    let mut r = rect.clone();
    for _ in 0..5 {
        r.p /= 2.0;
        r.prec = r.p * std::f64::consts::PI;
        consider(r.clone(), &mut best, &mut best_value);
    }

    // narrower rectangle
    let mut r = rect.clone();
    for _ in 0..5 {
        if r.width - 0.5 < 0.5 {
            break;
        }
        r.width -= 0.5;
        consider(r.clone(), &mut best, &mut best_value);
    }

    (best, best_value)
}
