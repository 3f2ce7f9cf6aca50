use std::collections::HashMap;

use super::{Answer, ProblemError, TaskInstance, TaskKind};

/// Default element cap for the subset-sum oracle.
pub const SUBSET_SUM_CAP: usize = 40;

pub fn oracle_sort(numbers: &[i64]) -> Vec<i64> {
    let mut out = numbers.to_vec();
    out.sort_unstable();
    out
}

/// Lowest index of `target` in a nondecreasing slice, by binary search.
pub fn search_sorted(numbers: &[i64], target: i64) -> i64 {
    let i = numbers.partition_point(|&x| x < target);
    if numbers.get(i) == Some(&target) {
        i as i64
    } else {
        -1
    }
}

/// Lowest index of `target`, by linear scan.
pub fn search_linear(numbers: &[i64], target: i64) -> i64 {
    numbers
        .iter()
        .position(|&x| x == target)
        .map_or(-1, |i| i as i64)
}

/// Lowest index of `target` or -1. Binary search when the input is sorted.
pub fn oracle_search(numbers: &[i64], target: i64) -> i64 {
    if numbers.windows(2).all(|w| w[0] <= w[1]) {
        search_sorted(numbers, target)
    } else {
        search_linear(numbers, target)
    }
}

pub fn is_palindrome(s: &[char]) -> bool {
    s.iter().eq(s.iter().rev())
}

/// Longest palindromic substring in linear time (Manacher). Ties go to the
/// leftmost occurrence.
pub fn oracle_lps(text: &str) -> String {
    let s: Vec<char> = text.chars().collect();
    let (start, len) = lps_span(&s);
    s[start..start + len].iter().collect()
}

/// `(start, len)` of the leftmost longest palindrome, in characters.
pub fn lps_span(s: &[char]) -> (usize, usize) {
    let n = s.len();
    if n == 0 {
        return (0, 0);
    }
    // odd[i]: radius (including the centre) of the longest odd palindrome at i.
    // even[i]: half-length of the longest even palindrome centred between i-1 and i.
    let mut odd = vec![0usize; n];
    let (mut l, mut r) = (0usize, 0usize); // rightmost window [l, r)
    for i in 0..n {
        let mut k = if i < r { odd[l + r - 1 - i].min(r - i) } else { 1 };
        while i + k < n && i >= k && s[i + k] == s[i - k] {
            k += 1;
        }
        odd[i] = k;
        if i + k > r {
            l = i + 1 - k;
            r = i + k;
        }
    }
    let mut even = vec![0usize; n];
    let (mut l, mut r) = (0usize, 0usize);
    for i in 0..n {
        let mut k = if i < r { even[l + r - i].min(r - i) } else { 0 };
        while i + k < n && i > k && s[i + k] == s[i - k - 1] {
            k += 1;
        }
        even[i] = k;
        if i + k > r {
            l = i - k;
            r = i + k;
        }
    }

    let mut best = (0usize, 1usize);
    for i in 0..n {
        let odd_span = (i + 1 - odd[i], 2 * odd[i] - 1);
        let even_span = (i - even[i], 2 * even[i]);
        for (start, len) in [odd_span, even_span] {
            if len > best.1 || (len == best.1 && start < best.0) {
                best = (start, len);
            }
        }
    }
    best
}

/// Finds a nonempty set of indices whose elements sum to `target`, using a
/// meet-in-the-middle split: both halves are enumerated and the right half's
/// partial sums are joined against a hash index of the left half's.
pub fn oracle_subset_sum(
    numbers: &[i64],
    target: i64,
    cap: usize,
) -> Result<Option<Vec<usize>>, ProblemError> {
    let n = numbers.len();
    if n > cap || n > 62 {
        return Err(ProblemError::SizeCapExceeded { n, cap });
    }
    let half = n / 2;
    let (left, right) = numbers.split_at(half);
    let left_sums = subset_sums(left);
    let right_sums = subset_sums(right);

    // For each reachable left sum keep one mask, preferring a nonempty one so
    // that target 0 never resolves to the empty subset.
    let mut index: HashMap<i128, u64> = HashMap::with_capacity(left_sums.len());
    for (mask, &sum) in left_sums.iter().enumerate() {
        let entry = index.entry(sum).or_insert(mask as u64);
        if *entry == 0 && mask != 0 {
            *entry = mask as u64;
        }
    }

    let target = target as i128;
    for (rmask, &rsum) in right_sums.iter().enumerate() {
        if let Some(&lmask) = index.get(&(target - rsum)) {
            if lmask == 0 && rmask == 0 {
                continue;
            }
            let mut picked: Vec<usize> = (0..half).filter(|i| lmask >> i & 1 == 1).collect();
            picked.extend((0..n - half).filter(|i| rmask >> i & 1 == 1).map(|i| i + half));
            return Ok(Some(picked));
        }
    }
    Ok(None)
}

/// All 2^k subset sums, indexed by bitmask.
fn subset_sums(xs: &[i64]) -> Vec<i128> {
    let mut sums = vec![0i128; 1 << xs.len()];
    for mask in 1..sums.len() {
        let low = mask.trailing_zeros() as usize;
        sums[mask] = sums[mask & (mask - 1)] + xs[low] as i128;
    }
    sums
}

/// The canonical reference answer for an instance.
pub fn solve(instance: &TaskInstance) -> Result<Answer, ProblemError> {
    instance.validate()?;
    Ok(match instance.task {
        TaskKind::Sort => Answer::NumberList(oracle_sort(&instance.numbers)),
        TaskKind::SearchSorted => {
            Answer::Index(search_sorted(&instance.numbers, instance.target.unwrap_or_default()))
        }
        TaskKind::SearchUnsorted => {
            Answer::Index(search_linear(&instance.numbers, instance.target.unwrap_or_default()))
        }
        TaskKind::LongestPalindromicSubstring => Answer::Substring(oracle_lps(instance.text())),
        TaskKind::SubsetSum => {
            let target = instance.target.unwrap_or_default();
            match oracle_subset_sum(&instance.numbers, target, SUBSET_SUM_CAP)? {
                Some(idx) => Answer::Subset(idx.iter().map(|&i| instance.numbers[i]).collect()),
                None => return Err(ProblemError::NoSolution),
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sort_examples() {
        assert_eq!(oracle_sort(&[3, 1, 2]), vec![1, 2, 3]);
        assert_eq!(oracle_sort(&[]), Vec::<i64>::new());
        assert_eq!(oracle_sort(&[5, 5, 1]), vec![1, 5, 5]);
    }

    #[test]
    fn search_examples() {
        assert_eq!(oracle_search(&[1, 3, 5], 5), 2);
        assert_eq!(oracle_search(&[1, 3, 5], 2), -1);
        assert_eq!(oracle_search(&[1, 2, 2, 3], 2), 1);
        assert_eq!(search_linear(&[4, 2, 2], 2), 1);
        assert_eq!(search_sorted(&[], 2), -1);
        assert_eq!(oracle_search(&[9, 1, 9], 9), 0);
    }

    #[test]
    fn lps_examples() {
        assert_eq!(oracle_lps("abcba"), "abcba");
        assert_eq!(oracle_lps("babad"), "bab");
        assert_eq!(oracle_lps("ab"), "a");
        assert_eq!(oracle_lps(""), "");
        assert_eq!(oracle_lps("cbbd"), "bb");
        assert_eq!(oracle_lps("abba"), "abba");
        assert_eq!(oracle_lps("aaaa"), "aaaa");
    }

    #[test]
    fn lps_counts_characters_not_bytes() {
        assert_eq!(oracle_lps("xéyéz"), "éyé");
    }

    #[test]
    fn subset_sum_examples() {
        assert_eq!(oracle_subset_sum(&[2, 4, 6], 5, 40).unwrap(), None);
        assert_eq!(oracle_subset_sum(&[1, 2, 3], 6, 40).unwrap(), Some(vec![0, 1, 2]));
        let xs = [5, 3, 8, 2];
        let idx = oracle_subset_sum(&xs, 10, 40).unwrap().unwrap();
        assert_eq!(idx.iter().map(|&i| xs[i]).sum::<i64>(), 10);
    }

    #[test]
    fn subset_sum_zero_target_needs_nonempty_witness() {
        assert_eq!(oracle_subset_sum(&[1, 2], 0, 40).unwrap(), None);
        let idx = oracle_subset_sum(&[3, -3, 7], 0, 40).unwrap().unwrap();
        assert_eq!(idx, vec![0, 1]);
        assert_eq!(oracle_subset_sum(&[0, 5], 0, 40).unwrap(), Some(vec![0]));
        // Zero in the right half only.
        assert_eq!(oracle_subset_sum(&[5, 0], 0, 40).unwrap(), Some(vec![1]));
    }

    #[test]
    fn subset_sum_cap() {
        let xs = vec![1; 41];
        assert_eq!(
            oracle_subset_sum(&xs, 3, SUBSET_SUM_CAP),
            Err(ProblemError::SizeCapExceeded { n: 41, cap: 40 })
        );
        assert!(oracle_subset_sum(&xs[..10], 3, 8).is_err());
    }

    #[test]
    fn subset_sum_no_overflow() {
        let xs = [i64::MAX, i64::MAX, -1];
        assert_eq!(oracle_subset_sum(&xs, i64::MAX - 1, 40).unwrap(), Some(vec![0, 2]));
    }
}
