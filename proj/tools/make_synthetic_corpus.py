#!/usr/bin/env python3
"""Writes the bundled synthetic CodeWorkout-style corpus.

Two problems (repeatEnd, fix45), 200 Java submissions from 40 students.
Each program is assembled from interchangeable fragments so that correct and
incorrect attempts share most structure and differ in a few telltale spots.
Output is deterministic for a given seed.

usage: make_synthetic_corpus.py OUT_DIR [--seed N]
"""
import argparse
import datetime as dt
import json
import pathlib
import random

PROBLEMS = [
    {
        "problem_id": "repeatEnd",
        "title": "repeatEnd",
        "statement": "Given a string and an int n, return a string made of n repetitions of the last n "
        "characters of the string. You may assume that n is between 0 and the length of the string, inclusive.",
    },
    {
        "problem_id": "fix45",
        "title": "fix45",
        "statement": "Return an array that contains exactly the same numbers as the given array, but rearranged "
        "so that every 4 is immediately followed by a 5. Do not move the 4's, but every other number may move. "
        "The array contains the same number of 4's and 5's, and every 4 has a number after it that is not a 4.",
    },
]

# The fix45 attempt reproduced from the motivating example, wrapped in a method.
PRECEDENCE_FIX45 = """public int[] fix45(int[] nums) {
    for (int i = 0; i < nums.length; i++) {
        if (i == 0 && nums[i] == 5 || nums[i] == 5 && nums[i-1] != 4) {
            int fiveSpot = i;
            for (int m = i; m < nums.length; m++) {
                if (nums[m] == 4 && nums[m+1] != 5) {
                    int otherNum = nums[m+1];
                    nums[m+1] = 5;
                    nums[fiveSpot] = otherNum;
                    break;
                }}}
    }
    return nums;
}
"""

STR_NAMES = ["end", "tail", "last", "piece", "suffix", "part", "chunk"]
ACC_NAMES = ["result", "out", "res", "answer", "built", "s"]
IDX_NAMES = ["i", "k", "j", "count", "x"]


def indent(lines, depth):
    return ["    " * depth + ln for ln in lines]


def repeat_end(rng, bug):
    """bug: None or one of start, bound, range, loopvar, returns_tail."""
    piece = rng.choice(STR_NAMES)
    acc = rng.choice(ACC_NAMES)
    idx = rng.choice(IDX_NAMES)
    use_builder = rng.random() < 0.4
    use_while = rng.random() < 0.3
    use_len = rng.random() < 0.5
    body = []
    if use_len:
        body.append("int len = str.length();")
        total = "len"
    else:
        total = "str.length()"
    if bug == "start":
        body.append(f"String {piece} = str.substring(n);")
    elif bug == "range":
        body.append(f"String {piece} = str.substring({total} - n, {total} - 1);")
    else:
        body.append(f"String {piece} = str.substring({total} - n);")
    if use_builder:
        body.append(f"StringBuilder {acc} = new StringBuilder();")
        add = f"{acc}.append({piece});"
    else:
        body.append(f'String {acc} = "";')
        add = f"{acc} += {piece};" if rng.random() < 0.5 else f"{acc} = {acc} + {piece};"
    limit = {"bound": "<= n", "loopvar": f"< {total}"}.get(bug, "< n")
    if use_while:
        body.append(f"int {idx} = 0;")
        body.append(f"while ({idx} {limit}) {{")
        body += indent([add, f"{idx}++;"], 1)
        body.append("}")
    else:
        step = f"{idx}++" if rng.random() < 0.7 else f"{idx} += 1"
        body.append(f"for (int {idx} = 0; {idx} {limit}; {step}) {{")
        body += indent([add], 1)
        body.append("}")
    if bug == "returns_tail":
        body.append(f"return {piece};")
    else:
        body.append(f"return {acc}.toString();" if use_builder else f"return {acc};")
    if rng.random() < 0.3:
        body = ["if (n == 0) {", '    return "";', "}"] + body
    return "public String repeatEnd(String str, int n) {\n" + "\n".join(indent(body, 1)) + "\n}\n"


def fix45(rng, bug):
    """bug: None or one of precedence, bound, no_guard, no_break, wrong_swap."""
    i = rng.choice(["i", "a", "p"])
    j = rng.choice(["j", "b", "q", "m"])
    tmp = rng.choice(["tmp", "temp", "other", "saved", "otherNum"])
    arr = "nums"
    outer_bound = f"{arr}.length" if bug == "bound" else f"{arr}.length - 1"
    style = rng.choice(["scan", "pointer"])
    body = []
    if style == "scan":
        if bug == "precedence":
            cond = f"{j} == 0 && {arr}[{j}] == 5 || {arr}[{j}] == 5 && {arr}[{j} - 1] != 4"
        elif bug == "no_guard":
            cond = f"{arr}[{j}] == 5"
        else:
            cond = rng.choice([
                f"{arr}[{j}] == 5 && ({j} == 0 || {arr}[{j} - 1] != 4)",
                f"({j} == 0 && {arr}[{j}] == 5) || ({arr}[{j}] == 5 && {arr}[{j} - 1] != 4)",
            ])
        swap = [f"int {tmp} = {arr}[{i} + 1];", f"{arr}[{i} + 1] = 5;", f"{arr}[{j}] = {tmp};"]
        if bug == "wrong_swap":
            swap = [f"{arr}[{i} + 1] = 5;", f"{arr}[{j}] = {arr}[{i}];"]
        inner = swap + ([] if bug == "no_break" else ["break;"])
        body.append(f"for (int {i} = 0; {i} < {outer_bound}; {i}++) {{")
        body += indent([f"if ({arr}[{i}] == 4 && {arr}[{i} + 1] != 5) {{"], 1)
        body += indent([f"for (int {j} = 0; {j} < {arr}.length; {j}++) {{"], 2)
        body += indent([f"if ({cond}) {{"], 3)
        body += indent(inner, 4)
        body += indent(["}"], 3)
        body += indent(["}"], 2)
        body += indent(["}"], 1)
        body.append("}")
    else:
        body.append(f"int {j} = 0;")
        body.append(f"for (int {i} = 0; {i} < {outer_bound}; {i}++) {{")
        body += indent([f"if ({arr}[{i}] == 4 && {arr}[{i} + 1] != 5) {{"], 1)
        if bug == "precedence":
            wcond = f"{arr}[{j}] != 5 || {j} > 0 && {arr}[{j} - 1] == 4 && {j} < {arr}.length"
        elif bug == "no_guard":
            wcond = f"{arr}[{j}] != 5"
        else:
            wcond = f"{arr}[{j}] != 5 || ({j} > 0 && {arr}[{j} - 1] == 4)"
        body += indent([f"while ({wcond}) {{", f"    {j}++;", "}"], 2)
        if bug == "wrong_swap":
            body += indent([f"{arr}[{j}] = {arr}[{i}];", f"{arr}[{i} + 1] = 5;"], 2)
        else:
            body += indent([f"{arr}[{j}] = {arr}[{i} + 1];", f"{arr}[{i} + 1] = 5;"], 2)
        if bug == "no_break":
            body += indent([f"{j} = 0;"], 2)
        body += indent(["}"], 1)
        body.append("}")
    if rng.random() < 0.3:
        body = [f"if ({arr}.length == 0) {{", f"    return {arr};", "}"] + body
    body.append(f"return {arr};")
    return "public int[] fix45(int[] nums) {\n" + "\n".join(indent(body, 1)) + "\n}\n"


BUGS = {
    "repeatEnd": ["start", "bound", "range", "loopvar", "returns_tail"],
    "fix45": ["precedence", "precedence", "precedence", "bound", "no_guard", "no_break", "wrong_swap"],
}
MAKERS = {"repeatEnd": repeat_end, "fix45": fix45}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out_dir")
    ap.add_argument("--seed", type=int, default=2019)
    ap.add_argument("--students", type=int, default=40)
    ap.add_argument("--total", type=int, default=200)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    base = dt.datetime(2019, 2, 4, 9, 0, 0, tzinfo=dt.timezone.utc)

    # attempts per (student, problem): start at 2 and top up at random until
    # the total is reached.
    slots = [(s, p["problem_id"]) for s in range(args.students) for p in PROBLEMS]
    attempts = {slot: 2 for slot in slots}
    while sum(attempts.values()) < args.total:
        attempts[rng.choice(slots)] += 1

    records = []
    precedence_slot = (7, "fix45")
    for slot in slots:
        student, problem = slot
        n = attempts[slot]
        # earlier attempts are incorrect; the last is correct 80% of the time
        finishes = rng.random() < 0.8
        when = base + dt.timedelta(days=rng.randint(0, 90), minutes=rng.randint(0, 600))
        for a in range(n):
            correct = finishes and a == n - 1
            if slot == precedence_slot and a == n - 1:
                correct = False
            bug = None if correct else rng.choice(BUGS[problem])
            code = MAKERS[problem](rng, bug)
            if slot == precedence_slot and a == n - 1:
                code = PRECEDENCE_FIX45
            when += dt.timedelta(minutes=rng.randint(2, 45))
            records.append({
                "submission_id": f"{problem}-{student:02d}-{a + 1}",
                "student_id": f"u{student:03d}",
                "problem_id": problem,
                "timestamp": when.strftime("%Y-%m-%dT%H:%M:%SZ"),
                "code": code,
                "is_correct": correct,
            })
    records.sort(key=lambda r: (r["timestamp"], r["submission_id"]))
    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "submissions.jsonl", "w") as f:
        for r in records:
            f.write(json.dumps(r) + "\n")
    with open(out / "problems.jsonl", "w") as f:
        for p in PROBLEMS:
            f.write(json.dumps(p) + "\n")


if __name__ == "__main__":
    main()
