//! The security-control taxonomy: a Detect/Prevent/React tree whose leaves
//! are individual tactics with the search keyword used to query questions.
//!
//! LDAP is deliberately present twice (network authentication and
//! authorization); both nodes share one tactic id and therefore one dataset.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Label assigned to snippets that implement no tactic.
pub const UNRELATED: &str = "UNRELATED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Category,
    Tactic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyNode {
    pub id: String,
    pub name: String,
    pub kind: NodeKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub query_keyword: Option<String>,
    pub included: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<TaxonomyNode>,
}

impl TaxonomyNode {
    fn category(id: &str, name: &str, children: Vec<TaxonomyNode>) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            kind: NodeKind::Category,
            query_keyword: None,
            included: true,
            children,
        }
    }

    fn tactic(id: &str, name: &str, keyword: &str) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            kind: NodeKind::Tactic,
            query_keyword: Some(keyword.into()),
            included: true,
            children: Vec::new(),
        }
    }

    fn excluded(id: &str, name: &str) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            kind: NodeKind::Tactic,
            query_keyword: None,
            included: false,
            children: Vec::new(),
        }
    }

    fn visit<'a>(&'a self, f: &mut impl FnMut(&'a TaxonomyNode)) {
        f(self);
        for child in &self.children {
            child.visit(f);
        }
    }
}

/// The Detect/Prevent/React tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TacticTaxonomy {
    pub roots: Vec<TaxonomyNode>,
}

impl Default for TacticTaxonomy {
    fn default() -> Self {
        Self::builtin()
    }
}

impl TacticTaxonomy {
    /// The built-in taxonomy: 20 included tactics plus the controls that
    /// never collected 25 related snippets and are kept as excluded leaves.
    pub fn builtin() -> Self {
        use TaxonomyNode as N;
        let detect = N::category(
            "detect",
            "Detect",
            vec![
                N::excluded("intrusion", "Intrusion"),
                N::category(
                    "data-integrity",
                    "Data Integrity",
                    vec![
                        N::tactic("sha512", "SHA512", "sha512"),
                        N::tactic("sha256", "SHA256", "sha256"),
                        N::tactic("md5", "MD5", "md5"),
                    ],
                ),
                N::excluded("dos", "Denial of Service"),
            ],
        );
        let prevent = N::category(
            "prevent",
            "Prevent",
            vec![
                N::category(
                    "authenticate",
                    "Authenticate",
                    vec![
                        N::tactic(
                            "token-authentication",
                            "Token Authentication",
                            "token authentication",
                        ),
                        N::tactic(
                            "digest-authentication",
                            "Digest Authentication",
                            "digest authentication",
                        ),
                        N::tactic("kerberos", "Kerberos", "kerberos"),
                        N::tactic("ldap", "LDAP", "ldap"),
                        N::excluded("chap", "CHAP"),
                        N::excluded("pap", "PAP"),
                        N::excluded("eap", "EAP"),
                    ],
                ),
                N::category(
                    "encrypt-decrypt",
                    "Encrypt/Decrypt",
                    vec![
                        N::tactic("aes", "AES", "aes"),
                        N::tactic("blowfish", "Blowfish", "blowfish"),
                        N::tactic("rsa", "RSA", "rsa"),
                        N::tactic("3des", "3DES", "3des"),
                    ],
                ),
                N::category(
                    "authorize",
                    "Authorize",
                    vec![
                        N::tactic("ldap", "LDAP", "ldap"),
                        N::tactic("oauth2", "OAuth 2.0", "oauth2"),
                        N::tactic("acl", "Access Control List", "acl"),
                        N::tactic(
                            "session-management",
                            "Session Management",
                            "session management",
                        ),
                        N::excluded("privilege-management", "Privilege Management"),
                        N::excluded("revoke-access", "Revoke Access/Privilege"),
                    ],
                ),
                N::tactic(
                    "input-validation",
                    "Input Validation",
                    "validation interceptor",
                ),
                N::category(
                    "secure-communication",
                    "Secure Communication",
                    vec![
                        N::tactic("sftp", "SFTP", "sftp"),
                        N::tactic("tls", "TLS", "tls"),
                        N::tactic("vpn", "VPN", "vpn"),
                        N::tactic("ssh", "SSH", "ssh"),
                    ],
                ),
            ],
        );
        let react = N::category(
            "react",
            "React",
            vec![
                N::tactic("audit-trail", "Audit Trail", "audit trail"),
                N::excluded("block", "Block"),
                N::excluded("isolate", "Isolate"),
                N::excluded("restore", "Restore"),
            ],
        );
        Self {
            roots: vec![detect, prevent, react],
        }
    }

    fn visit<'a>(&'a self, f: &mut impl FnMut(&'a TaxonomyNode)) {
        for root in &self.roots {
            root.visit(f);
        }
    }

    /// All included tactic leaves, deduplicated by tactic id in tree order.
    pub fn included_tactics(&self) -> Vec<&TaxonomyNode> {
        let mut seen = std::collections::BTreeSet::new();
        let mut out = Vec::new();
        self.visit(&mut |node| {
            if node.kind == NodeKind::Tactic && node.included && seen.insert(node.id.as_str()) {
                out.push(node);
            }
        });
        out
    }

    /// Excluded tactic leaves, deduplicated by id.
    pub fn excluded_tactics(&self) -> Vec<&TaxonomyNode> {
        let mut seen = std::collections::BTreeSet::new();
        let mut out = Vec::new();
        self.visit(&mut |node| {
            if node.kind == NodeKind::Tactic && !node.included && seen.insert(node.id.as_str()) {
                out.push(node);
            }
        });
        out
    }

    /// Find an included tactic by id.
    pub fn find_tactic(&self, id: &str) -> Option<&TaxonomyNode> {
        self.included_tactics()
            .into_iter()
            .find(|node| node.id == id)
    }

    /// Query keyword for a tactic id.
    pub fn query_keyword(&self, id: &str) -> Result<&str> {
        self.find_tactic(id)
            .and_then(|node| node.query_keyword.as_deref())
            .ok_or_else(|| Error::UnknownTactic { id: id.into() })
    }

    /// Category nodes that group two or more included tactics. These are the
    /// units for the merged-category experiments.
    pub fn experiment_categories(&self) -> Vec<(&TaxonomyNode, Vec<&TaxonomyNode>)> {
        let mut out = Vec::new();
        self.visit(&mut |node| {
            if node.kind != NodeKind::Category || node.children.is_empty() {
                return;
            }
            let members: Vec<&TaxonomyNode> = node
                .children
                .iter()
                .filter(|c| c.kind == NodeKind::Tactic && c.included)
                .collect();
            if members.len() >= 2 {
                out.push((node, members));
            }
        });
        out
    }

    /// Check the structural invariants of the tree.
    pub fn validate(&self) -> Result<()> {
        let root_ids: Vec<&str> = self.roots.iter().map(|r| r.id.as_str()).collect();
        if root_ids != ["detect", "prevent", "react"] {
            return Err(Error::Config(format!(
                "taxonomy roots must be detect/prevent/react, got {root_ids:?}"
            )));
        }
        let mut problem = None;
        self.visit(&mut |node| {
            if node.kind == NodeKind::Tactic
                && node.included
                && node.query_keyword.as_deref().is_none_or(str::is_empty)
                && problem.is_none()
            {
                problem = Some(node.id.clone());
            }
        });
        match problem {
            Some(id) => Err(Error::Config(format!(
                "included tactic {id:?} has no query keyword"
            ))),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_are_detect_prevent_react() {
        let tax = TacticTaxonomy::builtin();
        let names: Vec<&str> = tax.roots.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, ["Detect", "Prevent", "React"]);
        tax.validate().unwrap();
    }

    #[test]
    fn exactly_twenty_included_tactics() {
        let tax = TacticTaxonomy::builtin();
        let tactics = tax.included_tactics();
        assert_eq!(tactics.len(), 20);
        let ids: Vec<&str> = tactics.iter().map(|t| t.id.as_str()).collect();
        for id in [
            "sha512",
            "sha256",
            "md5",
            "token-authentication",
            "digest-authentication",
            "ldap",
            "kerberos",
            "aes",
            "blowfish",
            "rsa",
            "3des",
            "oauth2",
            "acl",
            "session-management",
            "input-validation",
            "sftp",
            "tls",
            "vpn",
            "ssh",
            "audit-trail",
        ] {
            assert!(ids.contains(&id), "missing tactic {id}");
        }
    }

    #[test]
    fn query_keywords_match_search_parameters() {
        let tax = TacticTaxonomy::builtin();
        assert_eq!(tax.query_keyword("aes").unwrap(), "aes");
        assert_eq!(tax.query_keyword("3des").unwrap(), "3des");
        assert_eq!(tax.query_keyword("ldap").unwrap(), "ldap");
        assert_eq!(
            tax.query_keyword("input-validation").unwrap(),
            "validation interceptor"
        );
        assert_eq!(
            tax.query_keyword("session-management").unwrap(),
            "session management"
        );
    }

    #[test]
    fn excluded_leaves_are_present_but_not_included() {
        let tax = TacticTaxonomy::builtin();
        let excluded: Vec<&str> = tax.excluded_tactics().iter().map(|t| t.id.as_str()).collect();
        assert_eq!(
            excluded.len(),
            10,
            "expected ten excluded controls, got {excluded:?}"
        );
        for id in [
            "intrusion",
            "dos",
            "chap",
            "pap",
            "eap",
            "privilege-management",
            "revoke-access",
            "block",
            "isolate",
            "restore",
        ] {
            assert!(excluded.contains(&id), "missing excluded control {id}");
        }
        assert!(tax.find_tactic("intrusion").is_none());
    }

    #[test]
    fn ldap_sits_in_authenticate_and_authorize() {
        let tax = TacticTaxonomy::builtin();
        let categories = tax.experiment_categories();
        let with_ldap: Vec<&str> = categories
            .iter()
            .filter(|(_, members)| members.iter().any(|m| m.id == "ldap"))
            .map(|(cat, _)| cat.id.as_str())
            .collect();
        assert_eq!(with_ldap, ["authenticate", "authorize"]);
    }

    #[test]
    fn five_experiment_categories() {
        let tax = TacticTaxonomy::builtin();
        let ids: Vec<&str> = tax
            .experiment_categories()
            .iter()
            .map(|(cat, _)| cat.id.as_str())
            .collect();
        assert_eq!(
            ids,
            [
                "data-integrity",
                "authenticate",
                "encrypt-decrypt",
                "authorize",
                "secure-communication"
            ]
        );
    }

    #[test]
    fn unknown_tactic_lookup_errors() {
        let tax = TacticTaxonomy::builtin();
        assert!(matches!(
            tax.query_keyword("quantum"),
            Err(Error::UnknownTactic { .. })
        ));
    }
}
