#!/usr/bin/env python3
"""Regenerates data/tokenizer_fixture.tsv.

Reference implementation of the Penn-Treebank word tokenizer (the rule set of
the classic tokenizer.sed, as popularized by NLTK's TreebankWordTokenizer),
kept in Python so the fixture is produced independently of the C++ tokenizer
it validates. Output: one "sentence<TAB>space-joined tokens" line per input.
"""

import re

STARTING_QUOTES = [
    (re.compile(r"^\""), r"``"),
    (re.compile(r"(``)"), r" \1 "),
    (re.compile(r"([ \(\[{<])(\"|\'{2})"), r"\1 `` "),
]

PUNCTUATION = [
    (re.compile(r"([:,])([^\d])"), r" \1 \2"),
    (re.compile(r"([:,])$"), r" \1 "),
    (re.compile(r"\.\.\."), r" ... "),
    (re.compile(r"[;@#$%&]"), r" \g<0> "),
    (re.compile(r'([^\.])(\.)([\]\)}>"\']*)\s*$'), r"\1 \2\3 "),
    (re.compile(r"[?!]"), r" \g<0> "),
    (re.compile(r"([^'])' "), r"\1 ' "),
]

PARENS_BRACKETS = [(re.compile(r"[\]\[\(\)\{\}\<\>]"), r" \g<0> ")]

DOUBLE_DASHES = [(re.compile(r"--"), r" -- ")]

ENDING_QUOTES = [
    (re.compile(r'"'), " '' "),
    (re.compile(r"(\S)(\'\')"), r"\1 \2 "),
    (re.compile(r"([^' ])('[sS]|'[mM]|'[dD]|') "), r"\1 \2 "),
    (re.compile(r"([^' ])('ll|'LL|'re|'RE|'ve|'VE|n't|N'T) "), r"\1 \2 "),
]

CONTRACTIONS = [
    re.compile(p, re.IGNORECASE)
    for p in [
        r"\b(can)(not)\b", r"\b(d)('ye)\b", r"\b(gim)(me)\b", r"\b(gon)(na)\b",
        r"\b(got)(ta)\b", r"\b(lem)(me)\b", r"\b(more)('n)\b", r"\b(wan)(na)(?=\s)",
        r" ('t)(is)\b", r" ('t)(was)\b",
    ]
]


def treebank_tokenize(text):
    for regexp, substitution in STARTING_QUOTES:
        text = regexp.sub(substitution, text)
    for regexp, substitution in PUNCTUATION:
        text = regexp.sub(substitution, text)
    for regexp, substitution in PARENS_BRACKETS:
        text = regexp.sub(substitution, text)
    for regexp, substitution in DOUBLE_DASHES:
        text = regexp.sub(substitution, text)
    text = " " + text + " "
    for regexp, substitution in ENDING_QUOTES:
        text = regexp.sub(substitution, text)
    for regexp in CONTRACTIONS:
        text = regexp.sub(r" \1 \2 ", text)
    return text.split()


SUBJECTS = [
    "The committee", "Our model", "A reviewer", "The agency", "This approach",
    "The dataset", "Each annotator", "The parser", "A small team", "The report",
]
VERBS = [
    "published", "evaluated", "rejected", "announced", "compared",
    "described", "measured", "improved", "collected", "released",
]
OBJECTS = [
    "the results", "a new benchmark", "three baselines", "the first draft",
    "an updated corpus", "the scoring rules", "several experiments",
    "the final figures", "a longer abstract", "two translations",
]
TAILS = [
    "on Monday.", "in early 2019.", "despite the noise.", "for the record.",
    "with 95% confidence.", "at the workshop.", "after some debate.",
    "without further changes.", "across all domains.", "in Table 4.",
]


def build_sentences():
    sents = []
    # 120 compositional sentences covering ordinary punctuation.
    for i in range(120):
        s = SUBJECTS[i % 10]
        v = VERBS[(i // 10) % 10]
        o = OBJECTS[(i * 3 + 1) % 10]
        t = TAILS[(i * 7 + 2) % 10]
        if i % 4 == 0:
            sents.append(f"{s} {v} {o}, and nobody disagreed {t}")
        elif i % 4 == 1:
            sents.append(f"{s} {v} {o} {t}")
        elif i % 4 == 2:
            sents.append(f"After a pause, {s.lower()} {v} {o} {t}")
        else:
            sents.append(f"{s} {v} {o}; the rest followed {t}")
    # 80 hand-written sentences exercising contractions, quotes, numbers,
    # brackets, dashes, and sentence-final punctuation variants.
    sents += [
        "Hello, world.",
        "I don't think it's ready.",
        "We're sure they've finished.",
        "She'll arrive tomorrow; he'd rather wait.",
        "I'm told we can't leave yet.",
        "You cannot be serious!",
        "They're gonna regret it, aren't they?",
        "It costs $3.50, not $4.",
        "Prices rose 3.76 percent in 2019.",
        "The total reached 1,000,000 items.",
        "Call me at 5:30 tomorrow.",
        "He said: never again.",
        "Wait -- that can't be right.",
        "The code (see Appendix B) was released.",
        "Results [adjusted] look stable.",
        "Is this the final version?",
        "Absolutely not!",
        "The file ends abruptly...",
        "A sentence with \"quoted words\" inside.",
        "\"Quoted at the start,\" she said.",
        "The dogs' owners arrived late.",
        "That is Thomas' book.",
        "won't it fail?",
        "WON'T IT FAIL?",
        "The U.S. economy grew slowly.",
        "Compare Fig. 3 with Fig. 4.",
        "He earned a Ph.D. in 2015.",
        "Let's try a simpler plan.",
        "What's done is done.",
        "Who'd have guessed?",
        "They'd better hurry.",
        "We've seen worse.",
        "You're right, of course.",
        "I'd call it a draw.",
        "O'Brien wrote the parser.",
        "The model's accuracy dropped.",
        "Both models' scores improved.",
        "Lemme see the logs.",
        "Gimme the short version.",
        "We gotta ship this week.",
        "Don't panic; read the manual.",
        "Stop! Look! Listen!",
        "Why? Because it works.",
        "One, two, three, four.",
        "Semicolons; colons: commas, periods.",
        "Use the #results channel.",
        "Margins improved by 12%.",
        "Send mail to ops@example.org please.",
        "The range is 10-20 tokens.",
        "A well-known baseline failed.",
        "State-of-the-art systems overfit.",
        "The score was 0.618 overall.",
        "Round it to 0.665, please.",
        "Chapter 12: Conclusions.",
        "See pages 10, 11, and 12.",
        "The ratio is 90:10 here.",
        "It ran in 2.5 seconds flat.",
        "No.",
        "Go now.",
        "Fine, we agree.",
        "However, the dev set shrank.",
        "Moreover, the loss diverged twice.",
        "In short, nothing changed.",
        "The answer, frankly, surprised us.",
        "First came data; then came doubt.",
        "Models (even small ones) memorize.",
        "Accuracy {not loss} mattered most.",
        "The tag <eos> was missing.",
        "It's 'tis the season, they say.",
        "The plan? Simple.",
        "Their house is bigger than ours.",
        "A 7-point drop ended the run.",
        "Version 2.0 shipped quietly.",
        "Teams A, B, and C tied.",
        "The quick brown fox jumps over the lazy dog.",
        "Pack my box with five dozen liquor jugs.",
        "Numbers like 42 need no quotes.",
        "End with an ellipsis...",
        "Done at last!",
        "Really, truly, finally done.",
    ]
    assert len(sents) == 200, len(sents)
    return sents


def main():
    with open("tokenizer_fixture.tsv", "w") as f:
        for s in build_sentences():
            toks = treebank_tokenize(s)
            f.write(s + "\t" + " ".join(toks) + "\n")


if __name__ == "__main__":
    main()
