use std::collections::BTreeMap;

use super::oracle::{is_palindrome, lps_span};
use super::{Answer, FailureMode, TaskInstance, TaskKind, Verdict};

/// Shortest block that counts as an immediately repeated sequence.
const MIN_REPEATED_BLOCK: usize = 3;

/// Checks an answer against an instance. Total: every pair yields a verdict.
///
/// Any valid witness is accepted: any index holding the search target, any
/// maximal palindrome, any sub-multiset with the right sum.
pub fn verify(instance: &TaskInstance, answer: &Answer) -> Verdict {
    match (instance.task, answer) {
        (_, Answer::Unparseable(_)) => Verdict::incorrect([FailureMode::ParseFailure]),
        (TaskKind::Sort, Answer::NumberList(list)) => verify_sort(&instance.numbers, list),
        (TaskKind::SearchSorted | TaskKind::SearchUnsorted, Answer::Index(i)) => {
            verify_search(&instance.numbers, instance.target, *i)
        }
        (TaskKind::LongestPalindromicSubstring, Answer::Substring(s)) => {
            verify_palindrome(instance.text(), s)
        }
        (TaskKind::SubsetSum, Answer::Subset(xs)) => {
            verify_subset(&instance.numbers, instance.target, xs)
        }
        // Answer shape does not fit the task.
        _ => Verdict::incorrect([FailureMode::ParseFailure]),
    }
}

fn counts(xs: &[i64]) -> BTreeMap<i64, usize> {
    let mut m = BTreeMap::new();
    for &x in xs {
        *m.entry(x).or_insert(0) += 1;
    }
    m
}

fn verify_sort(input: &[i64], answer: &[i64]) -> Verdict {
    let want = counts(input);
    let got = counts(answer);
    let mut failures = Vec::new();

    if got.keys().any(|k| !want.contains_key(k)) {
        failures.push(FailureMode::AddedElements);
    }
    if got
        .iter()
        .any(|(k, &c)| want.get(k).is_some_and(|&w| c > w))
    {
        failures.push(FailureMode::DuplicatedElements);
    }
    if want.iter().any(|(k, &w)| got.get(k).copied().unwrap_or(0) < w) {
        failures.push(FailureMode::MissingElements);
    }
    if answer.windows(2).any(|w| w[0] > w[1]) {
        failures.push(FailureMode::NotSorted);
    }
    if answer.len() < input.len() {
        failures.push(FailureMode::Truncated);
    }
    if has_repeated_block(answer, MIN_REPEATED_BLOCK) {
        failures.push(FailureMode::RepeatedSequence);
    }

    if failures.is_empty() {
        Verdict::correct()
    } else {
        Verdict::incorrect(failures)
    }
}

/// True if some block of at least `min` elements is immediately followed by
/// an identical copy of itself.
pub(crate) fn has_repeated_block(xs: &[i64], min: usize) -> bool {
    let n = xs.len();
    (min..=n / 2).any(|len| (0..=n - 2 * len).any(|i| xs[i..i + len] == xs[i + len..i + 2 * len]))
}

fn verify_search(numbers: &[i64], target: Option<i64>, index: i64) -> Verdict {
    let Some(target) = target else {
        return Verdict::incorrect([FailureMode::WrongIndex]);
    };
    let ok = if index == -1 {
        !numbers.contains(&target)
    } else {
        usize::try_from(index)
            .ok()
            .and_then(|i| numbers.get(i))
            .is_some_and(|&x| x == target)
    };
    if ok {
        Verdict::correct()
    } else {
        Verdict::incorrect([FailureMode::WrongIndex])
    }
}

fn verify_palindrome(text: &str, answer: &str) -> Verdict {
    let text_chars: Vec<char> = text.chars().collect();
    let ans: Vec<char> = answer.chars().collect();
    let (_, best) = lps_span(&text_chars);
    let ok = ans.len() == best && is_palindrome(&ans) && contains_run(&text_chars, &ans);
    if ok {
        Verdict::correct()
    } else {
        Verdict::incorrect([FailureMode::WrongSubstring])
    }
}

fn contains_run(haystack: &[char], needle: &[char]) -> bool {
    needle.is_empty() || haystack.windows(needle.len()).any(|w| w == needle)
}

fn verify_subset(numbers: &[i64], target: Option<i64>, subset: &[i64]) -> Verdict {
    let mut failures = Vec::new();
    let available = counts(numbers);
    let contained = counts(subset)
        .iter()
        .all(|(k, &c)| available.get(k).is_some_and(|&a| c <= a));
    if !contained {
        failures.push(FailureMode::SubsetNotInInput);
    }
    let sum: i128 = subset.iter().map(|&x| x as i128).sum();
    if subset.is_empty() || target.map(i128::from) != Some(sum) {
        failures.push(FailureMode::WrongSubsetSum);
    }
    if failures.is_empty() {
        Verdict::correct()
    } else {
        Verdict::incorrect(failures)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use FailureMode::*;

    fn sort_verdict(input: &[i64], answer: &[i64]) -> Verdict {
        verify(
            &TaskInstance::sort(input.to_vec()),
            &Answer::NumberList(answer.to_vec()),
        )
    }

    #[test]
    fn sort_examples() {
        assert_eq!(sort_verdict(&[3, 1, 2], &[1, 2, 3]), Verdict::correct());
        assert_eq!(
            sort_verdict(&[3, 1, 2], &[1, 2]),
            Verdict::incorrect([MissingElements, Truncated])
        );
        assert_eq!(
            sort_verdict(&[3, 1, 2], &[1, 2, 3, 4]),
            Verdict::incorrect([AddedElements])
        );
    }

    #[test]
    fn sort_failure_modes() {
        assert_eq!(
            sort_verdict(&[1, 2, 3], &[1, 2, 2, 3]),
            Verdict::incorrect([DuplicatedElements])
        );
        assert_eq!(
            sort_verdict(&[1, 2, 3], &[2, 1, 3]),
            Verdict::incorrect([NotSorted])
        );
        assert_eq!(
            sort_verdict(&[1, 2, 3, 4, 5, 6], &[1, 2, 3, 1, 2, 3]),
            Verdict::incorrect([DuplicatedElements, MissingElements, NotSorted, RepeatedSequence])
        );
        // Duplicates in the input must be kept.
        assert_eq!(sort_verdict(&[5, 5, 1], &[1, 5, 5]), Verdict::correct());
        assert_eq!(
            sort_verdict(&[5, 5, 1], &[1, 5]),
            Verdict::incorrect([MissingElements, Truncated])
        );
        assert_eq!(sort_verdict(&[], &[]), Verdict::correct());
    }

    #[test]
    fn repeated_block_threshold() {
        assert!(!has_repeated_block(&[1, 2, 1, 2], 3));
        assert!(has_repeated_block(&[9, 1, 2, 3, 1, 2, 3], 3));
        assert!(!has_repeated_block(&[1, 2, 3, 4, 1, 2, 3], 3));
    }

    #[test]
    fn search_accepts_any_occurrence() {
        let inst = TaskInstance::search(TaskKind::SearchSorted, vec![1, 2, 2, 3], 2);
        assert!(verify(&inst, &Answer::Index(1)).correct);
        assert!(verify(&inst, &Answer::Index(2)).correct);
        assert_eq!(verify(&inst, &Answer::Index(0)), Verdict::incorrect([WrongIndex]));
        assert_eq!(verify(&inst, &Answer::Index(-1)), Verdict::incorrect([WrongIndex]));
        assert_eq!(verify(&inst, &Answer::Index(17)), Verdict::incorrect([WrongIndex]));
        assert_eq!(verify(&inst, &Answer::Index(-5)), Verdict::incorrect([WrongIndex]));

        let absent = TaskInstance::search(TaskKind::SearchUnsorted, vec![4, 1], 7);
        assert!(verify(&absent, &Answer::Index(-1)).correct);
        assert!(!verify(&absent, &Answer::Index(0)).correct);
    }

    #[test]
    fn palindrome_accepts_any_maximal() {
        let inst = TaskInstance::palindrome("babad");
        assert!(verify(&inst, &Answer::Substring("bab".into())).correct);
        assert!(verify(&inst, &Answer::Substring("aba".into())).correct);
        assert_eq!(
            verify(&inst, &Answer::Substring("a".into())),
            Verdict::incorrect([WrongSubstring])
        );
        // Palindrome of the right length that does not occur in the text.
        assert!(!verify(&inst, &Answer::Substring("dad".into())).correct);
        assert!(!verify(&inst, &Answer::Substring("abad".into())).correct);
    }

    #[test]
    fn subset_accepts_any_witness() {
        let inst = TaskInstance::subset_sum(vec![5, 3, 8, 2], 10);
        assert!(verify(&inst, &Answer::Subset(vec![8, 2])).correct);
        assert!(verify(&inst, &Answer::Subset(vec![2, 3, 5])).correct);
        assert_eq!(
            verify(&inst, &Answer::Subset(vec![7, 3])),
            Verdict::incorrect([SubsetNotInInput])
        );
        assert_eq!(
            verify(&inst, &Answer::Subset(vec![5, 5])),
            Verdict::incorrect([SubsetNotInInput])
        );
        assert_eq!(
            verify(&inst, &Answer::Subset(vec![8])),
            Verdict::incorrect([WrongSubsetSum])
        );
        assert_eq!(
            verify(&inst, &Answer::Subset(vec![])),
            Verdict::incorrect([WrongSubsetSum])
        );
    }

    #[test]
    fn mismatched_and_unparseable_answers() {
        let inst = TaskInstance::sort(vec![1]);
        assert_eq!(
            verify(&inst, &Answer::Unparseable("??".into())),
            Verdict::incorrect([ParseFailure])
        );
        assert_eq!(
            verify(&inst, &Answer::Index(0)),
            Verdict::incorrect([ParseFailure])
        );
    }
}
