/// Composite Simpson rule over uniformly spaced samples.
///
/// An odd number of intervals closes with the 3/8 rule on the last three;
/// a single interval falls back to the trapezoid rule.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let intervals = values.len().saturating_sub(1);
    match intervals {
        0 => 0.0,
        1 => 0.5 * h * (values[0] + values[1]),
        k if k % 2 == 0 => simpson_even(values, h),
        k => {
            let head = &values[..k - 2];
            let tail = &values[k - 3..];
            let head_sum = if head.len() > 1 { simpson_even(head, h) } else { 0.0 };
            head_sum + 3.0 * h / 8.0 * (tail[0] + 3.0 * tail[1] + 3.0 * tail[2] + tail[3])
        }
    }
}

fn simpson_even(values: &[f64], h: f64) -> f64 {
    let last = values.len() - 1;
    let inner: f64 = values[1..last]
        .iter()
        .enumerate()
        .map(|(i, v)| if i % 2 == 0 { 4.0 * v } else { 2.0 * v })
        .sum();
    h / 3.0 * (values[0] + inner + values[last])
}
