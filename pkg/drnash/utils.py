"""
Copyright (c) 2014 Congressus, The Netherlands
Copyright (c) 2017-2023 Raphael Michel and contributors
Copyright (c) 2026 drnash contributors

Permission is hereby granted, free of charge, to any person obtaining a copy
of this software and associated documentation files (the "Software"), to deal
in the Software without restriction, including without limitation the rights
to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
copies of the Software, and to permit persons to whom the Software is furnished
to do so, subject to the following conditions:

The above copyright notice and this permission notice shall be included in all
copies or substantial portions of the Software.

THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER LIABILITY,
WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM, OUT OF OR IN
CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE SOFTWARE.
"""
import math
import re

import numpy as np

DECIMAL_PLACES = 6
MAX_ID_LENGTH = 70


def clean_id(name):
    """
    Transliterate an identifier to ASCII and truncate it, so that it can be
    written to CSV headers and rows without surprises.
    @param name: The identifier as given in the scenario file
    @return string, at most 70 characters, whitespace collapsed
    """
    from text_unidecode import unidecode

    name = unidecode(name)
    name = re.sub(r'\s+', ' ', name).strip()
    return name[:MAX_ID_LENGTH]


def float_to_decimal_str(value, places=DECIMAL_PLACES):
    """
    Helper to render a float the way every numeric CSV cell is rendered.
    Negative zero is written as zero so that identical runs stay byte-identical
    regardless of the sign bit.
    @param value: The float
    @return string with exactly `places` decimals
    """
    value = float(value)
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    text = "{:.{}f}".format(value, places)
    if text.startswith("-") and float(text) == 0:
        text = text[1:]
    return text


def round_decimal(value, places=DECIMAL_PLACES):
    """
    Round for serialization. Same convention as float_to_decimal_str but
    returns a float (used by summary.json).
    """
    return float(float_to_decimal_str(value, places))


def event_mask(horizon, event_hours):
    """
    Boolean array of length `horizon`, true at the DR event hours.
    """
    mask = np.zeros(horizon, dtype=bool)
    mask[sorted(event_hours)] = True
    return mask


def fsum_columns(matrix):
    """
    Column sums of a (players x hours) array with math.fsum, which is
    correctly rounded and therefore independent of the player order.
    """
    matrix = np.asarray(matrix, dtype=float)
    return np.array([math.fsum(column) for column in matrix.T])
