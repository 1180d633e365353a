//! Pull code blocks out of question bodies and build the unrelated pool.

use std::collections::BTreeSet;

use super::{CodeSnippet, RawQuestion, ReviewStatus};

/// A code block needs at least this many non-whitespace characters to become
/// a snippet; anything shorter is a fragment, not an implementation.
pub const MIN_SNIPPET_CHARS: usize = 10;

fn unescape_entities(text: &str) -> String {
    text.replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&#39;", "'")
        .replace("&amp;", "&")
}

/// Code blocks from `<pre><code>...</code></pre>` markup.
fn html_code_blocks(body: &str) -> Vec<String> {
    let lower = body.to_lowercase();
    let mut blocks = Vec::new();
    let mut cursor = 0;
    while let Some(pre_offset) = lower[cursor..].find("<pre") {
        let pre_start = cursor + pre_offset;
        let Some(code_offset) = lower[pre_start..].find("<code") else {
            break;
        };
        let code_tag_start = pre_start + code_offset;
        let Some(open_end) = lower[code_tag_start..].find('>') else {
            break;
        };
        let content_start = code_tag_start + open_end + 1;
        let Some(close_offset) = lower[content_start..].find("</code>") else {
            log::warn!("unterminated <code> block; skipping the rest of the body");
            break;
        };
        let content_end = content_start + close_offset;
        blocks.push(unescape_entities(&body[content_start..content_end]));
        cursor = content_end + "</code>".len();
    }
    blocks
}

/// Code blocks from markdown fences.
fn fenced_code_blocks(body: &str) -> Vec<String> {
    let mut blocks = Vec::new();
    let mut current: Option<String> = None;
    for line in body.lines() {
        if line.trim_start().starts_with("```") {
            match current.take() {
                Some(block) => blocks.push(block),
                None => current = Some(String::new()),
            }
            continue;
        }
        if let Some(block) = &mut current {
            block.push_str(line);
            block.push('\n');
        }
    }
    if current.is_some() {
        log::warn!("unterminated code fence; dropping trailing block");
    }
    blocks
}

/// Extract one snippet per code block of the question body.
///
/// HTML bodies use `<pre><code>` blocks; bodies without any fall back to
/// markdown fences. Snippet ids are `questionId#blockIndex` where the index
/// counts all discovered blocks, so ids stay stable if the size floor
/// changes. Blocks under [`MIN_SNIPPET_CHARS`] non-whitespace characters are
/// dropped.
pub fn extract_snippets(question: &RawQuestion, tactic_id: &str) -> Vec<CodeSnippet> {
    if question.body.trim().is_empty() {
        log::warn!("question {} has an empty body", question.question_id);
        return Vec::new();
    }
    let mut blocks = html_code_blocks(&question.body);
    if blocks.is_empty() {
        blocks = fenced_code_blocks(&question.body);
    }
    blocks
        .into_iter()
        .enumerate()
        .filter(|(_, text)| {
            text.chars().filter(|c| !c.is_whitespace()).count() >= MIN_SNIPPET_CHARS
        })
        .map(|(index, text)| CodeSnippet {
            id: format!("{}#{index}", question.question_id),
            source_question_id: question.question_id,
            source_url: question.link.clone(),
            tactic_id: tactic_id.to_string(),
            text,
            tags: question.tags.iter().cloned().collect(),
            review_status: ReviewStatus::Pending,
        })
        .collect()
}

/// Union of all tags carried by the given (related) questions.
pub fn related_tag_union(questions: &[RawQuestion]) -> BTreeSet<String> {
    questions
        .iter()
        .flat_map(|q| q.tags.iter().cloned())
        .collect()
}

/// Build the unrelated pool from generic Java questions.
///
/// A question is excluded when its tag set overlaps the related tag union
/// beyond the shared `java` tag; surviving questions contribute snippets
/// labeled `UNRELATED`.
pub fn build_unrelated_pool(
    java_questions: &[RawQuestion],
    related_tag_union: &BTreeSet<String>,
) -> Vec<CodeSnippet> {
    let mut excluded = 0usize;
    let pool: Vec<CodeSnippet> = java_questions
        .iter()
        .filter(|question| {
            let overlaps = question
                .tags
                .iter()
                .any(|tag| tag != "java" && related_tag_union.contains(tag));
            if overlaps {
                excluded += 1;
            }
            !overlaps
        })
        .flat_map(|question| extract_snippets(question, crate::taxonomy::UNRELATED))
        .collect();
    log::info!(
        "unrelated pool: {excluded} of {} questions excluded for tag overlap",
        java_questions.len()
    );
    pool
}

#[cfg(test)]
mod tests {
    use super::*;

    fn question(id: u64, body: &str, tags: &[&str]) -> RawQuestion {
        RawQuestion {
            question_id: id,
            title: format!("question {id}"),
            body: body.to_string(),
            tags: tags.iter().map(|t| t.to_string()).collect(),
            link: format!("https://example.org/q/{id}"),
        }
    }

    #[test]
    fn size_floor_drops_fragments() {
        let body = "<p>x</p><pre><code>int x=1;abc</code></pre><pre><code>y</code></pre>";
        let snippets = extract_snippets(&question(9, body, &["java"]), "aes");
        assert_eq!(snippets.len(), 1);
        assert_eq!(snippets[0].id, "9#0");
        assert_eq!(snippets[0].text, "int x=1;abc");
    }

    #[test]
    fn body_without_code_blocks_yields_nothing() {
        let snippets = extract_snippets(&question(1, "<p>just prose</p>", &["java"]), "aes");
        assert!(snippets.is_empty());
        assert!(extract_snippets(&question(2, "   ", &["java"]), "aes").is_empty());
    }

    #[test]
    fn forty_char_block_becomes_one_pending_snippet() {
        let code = "Cipher c = Cipher.getInstance(\"AES\");..";
        assert_eq!(code.len(), 40);
        let body = format!("<pre><code>{code}</code></pre>");
        let snippets = extract_snippets(&question(123, &body, &["java", "aes"]), "aes");
        assert_eq!(snippets.len(), 1);
        let snippet = &snippets[0];
        assert_eq!(snippet.id, "123#0");
        assert_eq!(snippet.source_question_id, 123);
        assert_eq!(snippet.review_status, ReviewStatus::Pending);
        assert_eq!(snippet.tactic_id, "aes");
        assert!(snippet.tags.contains("aes"));
    }

    #[test]
    fn block_index_counts_all_blocks_before_filtering() {
        let body = "<pre><code>tiny</code></pre><pre><code>long enough to keep 123</code></pre>";
        let snippets = extract_snippets(&question(5, body, &[]), "aes");
        assert_eq!(snippets.len(), 1);
        assert_eq!(snippets[0].id, "5#1");
    }

    #[test]
    fn entities_are_unescaped_and_attributes_tolerated() {
        let body = r#"<pre class="lang-java"><code>if (a &lt; b &amp;&amp; c &gt; d) { s = &quot;x&quot;; }</code></pre>"#;
        let snippets = extract_snippets(&question(7, body, &[]), "aes");
        assert_eq!(snippets[0].text, r#"if (a < b && c > d) { s = "x"; }"#);
    }

    #[test]
    fn markdown_fences_are_a_fallback() {
        let body = "Intro\n```\nKeyGenerator kg = KeyGenerator.getInstance();\n```\ntail";
        let snippets = extract_snippets(&question(11, body, &[]), "aes");
        assert_eq!(snippets.len(), 1);
        assert!(snippets[0].text.contains("KeyGenerator"));
    }

    #[test]
    fn pool_excludes_tag_overlap_beyond_java() {
        let related_union: BTreeSet<String> =
            ["java", "ldap", "aes"].iter().map(|s| s.to_string()).collect();
        let code_body = "<pre><code>List<String> xs = new ArrayList<>();</code></pre>";
        let questions = vec![
            question(1, code_body, &["java", "ldap"]),     // excluded
            question(2, code_body, &["java", "collections"]), // kept
            question(3, code_body, &["java"]),             // kept
        ];
        let pool = build_unrelated_pool(&questions, &related_union);
        assert_eq!(pool.len(), 2);
        assert!(pool.iter().all(|s| s.is_unrelated()));
        assert!(pool.iter().all(|s| s.source_question_id != 1));
    }

    #[test]
    fn pool_count_matches_retained_questions() {
        let related_union: BTreeSet<String> =
            ["java", "ldap", "oauth2", "tls"].iter().map(|s| s.to_string()).collect();
        let code_body = "<pre><code>System.out.println(value + 1);</code></pre>";
        let questions: Vec<RawQuestion> = (0..10)
            .map(|i| {
                let tags: Vec<&str> = match i {
                    0 => vec!["java", "ldap"],
                    4 => vec!["java", "oauth2"],
                    7 => vec!["java", "tls"],
                    _ => vec!["java", "generics"],
                };
                question(i, code_body, &tags)
            })
            .collect();
        let pool = build_unrelated_pool(&questions, &related_union);
        assert_eq!(pool.len(), 7);
    }
}
