//! Rendered prompts are compared byte for byte with files in `tests/golden`.
//! Set `PSV_BLESS=1` to rewrite them after an intentional change.

use std::collections::BTreeMap;
use std::path::PathBuf;

use psv_core::llm::{python_list, PromptTemplate, TemplateName};

const TOPIC: &str = "Should trophy hunting be banned?";
const ARG_1: &str = "Hunting fees pay for conservation of wild habitats.";
const ARG_2: &str = "Killing animals for sport is cruel and unnecessary.";

fn fills(name: TemplateName) -> BTreeMap<&'static str, String> {
    let concepts = python_list(&["poaching".into(), "conservation".into(), "it's cruel".into()]);
    let groups = python_list(&["Hunters".into(), "Animal rights activists".into()]);
    let pairs: Vec<(&str, String)> = match name {
        TemplateName::StanceZero | TemplateName::StanceFew => vec![
            ("topic", TOPIC.into()),
            ("argument", ARG_1.into()),
            ("aspect", "conservation".into()),
        ],
        TemplateName::Relevance => vec![("topic", TOPIC.into()), ("concept", "water".into())],
        TemplateName::TopicStakeholders => vec![("topic", TOPIC.into())],
        TemplateName::ArgumentStakeholders => vec![("argument", ARG_2.into()), ("stakeholders", groups)],
        TemplateName::PairwiseAcceptability => vec![
            ("argument_1", ARG_1.into()),
            ("argument_2", ARG_2.into()),
            ("concepts", concepts),
        ],
    };
    pairs.into_iter().collect()
}

fn golden(name: TemplateName) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(format!("{name}.txt"))
}

#[test]
fn rendered_prompts_match_golden_files() {
    let bless = std::env::var_os("PSV_BLESS").is_some();
    for name in TemplateName::ALL {
        let rendered = PromptTemplate::get(name).render(&fills(name)).unwrap();
        assert!(!rendered.contains("{"), "{name}: unfilled placeholder");
        let path = golden(name);
        if bless {
            std::fs::write(&path, &rendered).unwrap();
            continue;
        }
        let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(rendered, expected, "{name} drifted from {}", path.display());
    }
}

#[test]
fn every_placeholder_is_required() {
    for name in TemplateName::ALL {
        let template = PromptTemplate::get(name);
        let full = fills(name);
        assert_eq!(
            template
                .placeholders()
                .into_iter()
                .collect::<std::collections::BTreeSet<_>>(),
            full.keys().map(|k| k.to_string()).collect(),
            "{name}"
        );
        for key in full.keys() {
            let mut partial = full.clone();
            partial.remove(key);
            assert!(
                template.render(&partial).is_err(),
                "{name} rendered without `{key}`"
            );
        }
    }
}

#[test]
fn python_list_quotes_like_repr() {
    assert_eq!(python_list(&["a".into(), "it's".into()]), r#"['a', "it's"]"#);
    assert_eq!(python_list(&[]), "[]");
}
