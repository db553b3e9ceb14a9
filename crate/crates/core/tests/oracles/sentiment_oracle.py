"""Prints reference sentiment scores for the pinned sentences.

Requires vaderSentiment 3.3.2 and textblob 0.20.1. Rounding in the
reference analyzer is disabled so full-precision values can be pinned.
Output: one tab-separated line per sentence: compound, neg, neu, pos,
polarity, subjectivity, sentence.

    python3 sentiment_oracle.py > ../fixtures/sentiment_oracle.tsv
"""

import vaderSentiment.vaderSentiment as vs
from textblob import TextBlob

vs.round = lambda x, n: x

SENTENCES = [
    "VADER is smart, handsome, and funny.",
    "VADER is smart, handsome, and funny!",
    "VADER is very smart, handsome, and funny.",
    "VADER is VERY SMART, handsome, and FUNNY.",
    "VADER is VERY SMART, handsome, and FUNNY!!!",
    "VADER is not smart, handsome, nor funny.",
    "The book was good.",
    "At least it isn't a horrible book.",
    "The book was only kind of good.",
    "The plot was good, but the characters are uncompelling and the dialog is not great.",
    "Today SUX!",
    "Today only kinda sux! But I'll get by, lol",
    "Sentiment analysis has never been this good!",
    "Without a doubt, excellent idea.",
    "Roger Dodger is one of the least compelling variations on this theme.",
    "Not such a badass after all.",
    "hodl on comrade!",
    "Signal for today is 0 % BTC / 100 % USD",
    "buy the dip, bitcoin will moon?? or crash???",
    "great",
    "terrible loss",
    "not good",
    "very good",
    "Bitcoin price is terribly low but I am very happy :)",
]

analyzer = vs.SentimentIntensityAnalyzer()
print("# compound\tneg\tneu\tpos\tpolarity\tsubjectivity\ttext")
for s in SENTENCES:
    v = analyzer.polarity_scores(s)
    b = TextBlob(s).sentiment
    values = (v["compound"], v["neg"], v["neu"], v["pos"], b.polarity, b.subjectivity)
    print("\t".join([repr(float(x)) for x in values] + [s]))
