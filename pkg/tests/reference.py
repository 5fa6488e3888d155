"""Expected values for the bundled fixtures, written down by hand."""

from protopart.rules import conf, intg

# Port behind each symbol of the hand derivation for the single-party DH model.
DH_SYMBOLS = {
    "s": "sec.ssec",
    "g^y": "sec.pub",
    "g^x": "pub.pub",
    "l": "rng.len",
    "g": "g.Const",
    "m": "m.Const",
    "x": "rng.data",
    "xi": "pub.x",
    "xr": "sec.x",
    "gi": "pub.g",
    "gr": "sec.g",
    "mi": "pub.m",
    "mr": "sec.m",
}

_C, _I = conf, intg

# (symbol, atom builder, value) in the order the derivation lists them
DH_SOLUTION = [
    ("s", _I, False), ("g^y", _I, False), ("l", _C, False), ("g", _C, False), ("m", _C, False), ("g^x", _C, False),
    ("g^x", _I, False),
    ("g^y", _C, False),
    ("xi", _C, True), ("xi", _I, True),
    ("mi", _I, True), ("gi", _I, True),
    ("mr", _I, True), ("gr", _I, True),
    ("xr", _C, True), ("xr", _I, True),
    ("s", _C, True),
    ("m", _I, True),
    ("g", _I, True),
    ("mi", _C, False), ("mr", _C, False),
    ("gi", _C, False), ("gr", _C, False),
    ("x", _C, True),
    ("x", _I, True),
]


def dh_expected():
    return {make(DH_SYMBOLS[sym]): value for sym, make, value in DH_SOLUTION}


# The four facts established for the counter-mode example.
ENC_FACTS = {
    intg("enc.Cipher"): False,
    intg("enc.Key"): True,
    conf("enc.Key"): True,
    intg("enc.Ctr"): True,
}
