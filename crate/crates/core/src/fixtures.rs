//! Small reference inputs: the WordNet animal fragment and a two-classifier
//! score sheet over it.

use crate::sheet::ScoreSheet;
use crate::taxonomy::{ClassId, Taxonomy};

/// `(child, parent)` pairs of the animal fragment. `dog` has two parents.
pub const WORDNET_ANIMAL_EDGES: [(&str, &str); 19] = [
    ("domestic_animal", "animal"),
    ("carnivore", "animal"),
    ("dog", "domestic_animal"),
    ("dog", "canine"),
    ("working_dog", "dog"),
    ("hunting_dog", "dog"),
    ("watch_dog", "working_dog"),
    ("shepherd_dog", "working_dog"),
    ("pinscher", "watch_dog"),
    ("doberman", "pinscher"),
    ("rottweiler", "shepherd_dog"),
    ("hound", "hunting_dog"),
    ("bluetick", "hound"),
    ("canine", "carnivore"),
    ("feline", "carnivore"),
    ("fox", "canine"),
    ("cat", "feline"),
    ("domestic_cat", "cat"),
    ("wild_cat", "cat"),
];

pub fn wordnet_animals() -> Taxonomy {
    Taxonomy::from_edges(
        WORDNET_ANIMAL_EDGES
            .iter()
            .map(|&(c, p)| (ClassId::new(c).unwrap(), ClassId::new(p).unwrap())),
    )
    .expect("fixture is acyclic")
}

/// Classifier `f1` over {dog, fox, cat}, `f2` over {dog, doberman, rottweiler}.
pub fn two_classifier_sheet() -> ScoreSheet {
    let mut sheet = ScoreSheet::new("x");
    for (clf, class, score) in [
        ("f1", "dog", 0.7),
        ("f1", "fox", 0.2),
        ("f1", "cat", 0.1),
        ("f2", "dog", 0.3),
        ("f2", "doberman", 0.4),
        ("f2", "rottweiler", 0.3),
    ] {
        sheet
            .insert(clf, ClassId::new(class).unwrap(), score)
            .expect("fixture scores are valid");
    }
    sheet
}
