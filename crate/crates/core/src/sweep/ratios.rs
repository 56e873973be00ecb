/// Every way of splitting `n` traders among `t` strategies, in descending
/// lexicographic order: `(n, 0, …, 0)` first and `(0, …, 0, n)` last.
pub fn enumerate_ratios(t: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(ratio_count(t, n) as usize);
    if t == 0 {
        return out;
    }
    let mut current = vec![0; t];
    fill(&mut current, 0, n, &mut out);
    out
}

fn fill(current: &mut Vec<usize>, pos: usize, left: usize, out: &mut Vec<Vec<usize>>) {
    if pos == current.len() - 1 {
        current[pos] = left;
        out.push(current.clone());
        return;
    }
    for k in (0..=left).rev() {
        current[pos] = k;
        fill(current, pos + 1, left - k, out);
    }
}

/// `C(n + t − 1, t − 1)`.
pub fn ratio_count(t: usize, n: usize) -> u64 {
    if t == 0 {
        return 0;
    }
    let k = (t - 1) as u64;
    let total = (n + t - 1) as u64;
    (0..k).fold(1u64, |acc, i| acc * (total - i) / (i + 1))
}

/// True when one strategy holds every slot.
pub fn is_homogeneous(ratio: &[usize]) -> bool {
    ratio.iter().filter(|c| **c > 0).count() == 1
}
