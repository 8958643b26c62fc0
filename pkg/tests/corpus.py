"""Hand-labeled refinement corpus shared by the unit and acceptance suites.

Each case is (case_id, kind, payload, prompt_object, expected) where kind
selects how the payload becomes raw triplets:
  - "triplets": payload is a list of (subject, verb, object) fed to refine
  - "text": payload is free-form text run through the rule-based extractor
  - "structured": payload is structured-prompt output run through the parser
Expected is the exact (subject, verb, object) list after refinement.
"""

REFINEMENT_CASES = [
    # Direct triplet inputs exercising the three pruning gates.
    ("non_human_subject", "triplets", [("cup", "next to", "bottle")], "bottle", []),
    ("copular_and_mismatch", "triplets", [("man", "is", "tall")], "bike", []),
    ("all_gates_pass", "triplets", [("woman", "riding", "bike")], "bike",
     [("woman", "riding", "bike")]),
    ("stative_has", "triplets", [("man", "has", "cup")], "cup", []),
    ("person_subject", "triplets", [("person", "holding", "cup")], "cup",
     [("person", "holding", "cup")]),
    ("animal_subject", "triplets", [("dog", "chasing", "ball")], "ball", []),
    ("object_mismatch", "triplets", [("man", "holding", "bottle")], "cup", []),
    ("plural_subject", "triplets", [("people", "carrying", "sofa")], "sofa",
     [("people", "carrying", "sofa")]),
    ("girl_subject", "triplets", [("girl", "petting", "dog")], "dog",
     [("girl", "petting", "dog")]),
    ("stative_was", "triplets", [("man", "was", "bike")], "bike", []),
    ("compound_verb_kept", "triplets", [("guy", "sitting on", "chair")], "chair",
     [("guy", "sitting on", "chair")]),
    ("stative_looks", "triplets", [("lady", "looks", "painting")], "painting", []),
    ("duplicates_retained", "triplets",
     [("man", "riding", "bike"), ("man", "riding", "bike")], "bike",
     [("man", "riding", "bike"), ("man", "riding", "bike")]),
    ("mixed_order_preserved", "triplets",
     [("man", "riding", "bike"), ("cup", "next to", "bottle"), ("woman", "holding", "bike")],
     "bike", [("man", "riding", "bike"), ("woman", "holding", "bike")]),
    ("prompt_object_normalized", "triplets", [("child", "hugging", "teddy bear")],
     "the Teddy  Bear", [("child", "hugging", "teddy bear")]),
    # Free-form text through the rule-based extractor.
    ("simple_progressive", "text", "The man is riding the bike.", "bike",
     [("man", "riding", "bike")]),
    ("no_pattern", "text", "Hello.", "bike", []),
    ("conjunction_first_object", "text", "A woman holds an umbrella and pets a dog.",
     "umbrella", [("woman", "holds", "umbrella")]),
    ("conjunction_second_object", "text", "A woman holds an umbrella and pets a dog.",
     "dog", [("woman", "pets", "dog")]),
    ("positional_pruned", "text", "The cup is next to the bottle.", "bottle", []),
    ("verb_particle", "text", "The man stands near the bike.", "bike",
     [("man", "stands near", "bike")]),
    ("copular_no_object", "text", "The man is tall.", "bike", []),
    ("pronoun_subject_pruned", "text", "He rides the bike.", "bike", []),
    ("two_sentences_one_on_prompt", "text",
     "The man is riding the bike. The man is holding a cup.", "bike",
     [("man", "riding", "bike")]),
    ("two_clauses_distinct_subjects", "text",
     "A man carries a surfboard and a woman carries an umbrella.", "umbrella",
     [("woman", "carries", "umbrella")]),
    ("empty_text", "text", "", "bike", []),
    ("no_interaction_reply", "text", "no interaction", "bike", []),
    # Structured-prompt answers through the lenient parser.
    ("structured_single", "structured", "(person, ride, bike)", "bike",
     [("person", "ride", "bike")]),
    ("structured_none_marker", "structured", "(person, none, bike)", "bike", []),
    ("structured_amid_garbage", "structured", "garbage (person, sit on, bike) garbage",
     "bike", [("person", "sit on", "bike")]),
]
