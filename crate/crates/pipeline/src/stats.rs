//! Human-readable rendering of label statistics.
//!
//! Rows are ordered the way the task's label-distribution table lists them:
//! the non-sarcastic row first, then combinations by ascending flag count,
//! pairs and triples ordered with overstatement ahead of understatement
//! (the table's convention), and a total line last. Only observed
//! combinations are printed.

use sarc_core::corpus::{CategoryLabel, LabelStats};

/// Display order of the flags within combination rows.
const DISPLAY_ORDER: [CategoryLabel; 6] = [
    CategoryLabel::Sarcasm,
    CategoryLabel::Irony,
    CategoryLabel::Satire,
    CategoryLabel::Overstatement,
    CategoryLabel::Understatement,
    CategoryLabel::RhetoricalQuestion,
];

fn capitalize(text: &str) -> String {
    let mut chars = text.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

/// Canonical stats key for a set of labels (canonical flag order).
fn canonical_key(labels: &[CategoryLabel]) -> String {
    let mut members: Vec<CategoryLabel> = labels.to_vec();
    members.sort();
    if members.len() == 1 {
        format!("only-{}", members[0].name())
    } else {
        members
            .iter()
            .map(|l| l.name())
            .collect::<Vec<_>>()
            .join("+")
    }
}

/// Table-style display label for a set of labels (display flag order).
fn display_label(labels: &[CategoryLabel]) -> String {
    let mut members: Vec<CategoryLabel> = labels.to_vec();
    members.sort_by_key(|l| DISPLAY_ORDER.iter().position(|d| d == l).unwrap());
    let names: Vec<&str> = members.iter().map(|l| l.display_name()).collect();
    match names.len() {
        1 => format!("Only-{}", names[0]),
        2 => capitalize(&format!("{} and {}", names[0], names[1])),
        _ => {
            let (last, rest) = names.split_last().unwrap();
            capitalize(&format!("{} and {}", rest.join(", "), last))
        }
    }
}

/// All label combinations in display order: ascending flag count, then
/// lexicographic over display positions.
fn combinations() -> Vec<Vec<CategoryLabel>> {
    let mut combos: Vec<Vec<CategoryLabel>> = (1u8..64)
        .map(|bits| {
            DISPLAY_ORDER
                .iter()
                .enumerate()
                .filter(|(bit, _)| bits & (1 << bit) != 0)
                .map(|(_, &label)| label)
                .collect()
        })
        .collect();
    combos.sort_by_key(|members| {
        let positions: Vec<usize> = members
            .iter()
            .map(|l| DISPLAY_ORDER.iter().position(|d| d == l).unwrap())
            .collect();
        (members.len(), positions)
    });
    combos
}

/// Renders stats as `<label> <count>` lines plus a total.
pub fn render_label_stats(stats: &LabelStats) -> String {
    let mut out = String::new();
    let mut push = |label: &str, count: u64| {
        out.push_str(&format!("{label} {count}\n"));
    };

    let non_sarcastic = stats.count("non-sarcastic");
    if non_sarcastic > 0 {
        push("Non-sarcastic", non_sarcastic);
    }
    let uncategorized = stats.count("sarcastic-uncategorized");
    if uncategorized > 0 {
        push("Sarcastic (uncategorized)", uncategorized);
    }
    for members in combinations() {
        let count = stats.count(&canonical_key(&members));
        if count > 0 {
            push(&display_label(&members), count);
        }
    }
    let unlabeled = stats.count("unlabeled");
    if unlabeled > 0 {
        push("Unlabeled", unlabeled);
    }
    push("Total", stats.total);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use sarc_core::corpus::{label_stats, CategoryFlags, Corpus, Source, TextInstance};

    #[test]
    fn display_labels_match_table_style() {
        assert_eq!(display_label(&[CategoryLabel::Sarcasm]), "Only-sarcasm");
        assert_eq!(
            display_label(&[CategoryLabel::Irony, CategoryLabel::Sarcasm]),
            "Sarcasm and irony"
        );
        assert_eq!(
            display_label(&[CategoryLabel::RhetoricalQuestion, CategoryLabel::Irony]),
            "Irony and rhetorical question"
        );
        assert_eq!(
            display_label(&[
                CategoryLabel::RhetoricalQuestion,
                CategoryLabel::Understatement,
                CategoryLabel::Irony
            ]),
            "Irony, understatement and rhetorical question"
        );
    }

    #[test]
    fn pair_rows_put_overstatement_before_understatement() {
        let combos = combinations();
        let position = |target: &[CategoryLabel]| {
            combos
                .iter()
                .position(|c| {
                    let mut sorted = c.clone();
                    sorted.sort();
                    let mut expected = target.to_vec();
                    expected.sort();
                    sorted == expected
                })
                .unwrap()
        };
        let over = position(&[CategoryLabel::Sarcasm, CategoryLabel::Overstatement]);
        let under = position(&[CategoryLabel::Sarcasm, CategoryLabel::Understatement]);
        assert!(over < under);
    }

    #[test]
    fn renders_observed_rows_and_total() {
        let mut instances = vec![
            TextInstance::binary("n1", "one", false, Source::Isarcasm),
            TextInstance::binary("n2", "two", false, Source::Isarcasm),
        ];
        let mut only_sarcasm = TextInstance::binary("s1", "three", true, Source::Isarcasm);
        only_sarcasm.category_flags = CategoryFlags::only(CategoryLabel::Sarcasm);
        instances.push(only_sarcasm);
        let mut pair = TextInstance::binary("s2", "four", true, Source::Isarcasm);
        pair.category_flags.irony = true;
        pair.category_flags.rhetorical_question = true;
        instances.push(pair);

        let corpus = Corpus::validated("c", instances).unwrap();
        let rendered = render_label_stats(&label_stats(&corpus));
        let lines: Vec<&str> = rendered.lines().collect();
        assert_eq!(
            lines,
            vec![
                "Non-sarcastic 2",
                "Only-sarcasm 1",
                "Irony and rhetorical question 1",
                "Total 4",
            ]
        );
    }

    #[test]
    fn empty_corpus_renders_total_zero() {
        let rendered = render_label_stats(&label_stats(&Corpus::new("e")));
        assert_eq!(rendered, "Total 0\n");
    }
}
