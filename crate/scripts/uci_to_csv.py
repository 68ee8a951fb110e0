#!/usr/bin/env python3
"""Convert the raw UCI Adult and German credit files into headered CSVs.

Usage:
    uci_to_csv.py adult  adult.data adult.test  > data/adult.csv
    uci_to_csv.py german german.data            > data/german.csv

Adult: train and test parts are concatenated, surrounding whitespace is
stripped, '?' becomes an empty cell (the loader drops those rows) and the
trailing '.' on test-part labels is removed.

German: the space-separated attribute codes are kept as-is; the class
column is mapped 1 -> good, 2 -> bad.
"""
import csv
import sys

ADULT = [
    "age", "workclass", "fnlwgt", "education", "education_num",
    "marital_status", "occupation", "relationship", "race", "sex",
    "capital_gain", "capital_loss", "hours_per_week", "native_country",
    "income",
]

GERMAN = [
    "checking_status", "duration", "credit_history", "purpose",
    "credit_amount", "savings_status", "employment",
    "installment_commitment", "personal_status", "other_parties",
    "residence_since", "property_magnitude", "age", "other_payment_plans",
    "housing", "existing_credits", "job", "num_dependents", "own_telephone",
    "foreign_worker", "class",
]


def adult(paths, out):
    out.writerow(ADULT)
    for path in paths:
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("|"):
                    continue
                cells = [c.strip() for c in line.split(",")]
                if len(cells) != len(ADULT):
                    continue
                cells = ["" if c == "?" else c for c in cells]
                cells[-1] = cells[-1].rstrip(".")
                out.writerow(cells)


def german(paths, out):
    out.writerow(GERMAN)
    for path in paths:
        with open(path) as fh:
            for line in fh:
                cells = line.split()
                if not cells:
                    continue
                cells[-1] = {"1": "good", "2": "bad"}[cells[-1]]
                out.writerow(cells)


def main():
    kind, paths = sys.argv[1], sys.argv[2:]
    out = csv.writer(sys.stdout, lineterminator="\n")
    {"adult": adult, "german": german}[kind](paths, out)


if __name__ == "__main__":
    main()
