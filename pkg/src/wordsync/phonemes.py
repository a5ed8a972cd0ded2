"""Phoneme inventory shared by the lexicon, the frame-probability container and
the synthetic generator.

The inventory is ARPAbet without stress markers.  The CTC blank is not a
phoneme; it only exists as column 0 of a frame-probability matrix.
"""

BLANK = "<blank>"

ARPABET = (
    "AA", "AE", "AH", "AO", "AW", "AY",
    "B", "CH", "D", "DH",
    "EH", "ER", "EY",
    "F", "G", "HH",
    "IH", "IY", "JH", "K", "L", "M", "N", "NG",
    "OW", "OY", "P", "R", "S", "SH", "T", "TH",
    "UH", "UW", "V", "W", "Y", "Z",
)

# Visually confusable classes (bilabials, labiodentals, sibilants).  Used as the
# default confusion grouping of the synthetic frame generator.
DEFAULT_CONFUSION_GROUPS = (
    ("P", "B", "M"),
    ("F", "V"),
    ("S", "Z"),
)
