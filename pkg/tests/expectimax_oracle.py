"""Independent brute-force expectimax oracle.

Pure-Python reimplementation of the planning recursion used to cross-check
the package planner. It shares no code with the package: actions are plain
tuples, matrices are lists of lists, and every chance node is enumerated
explicitly with per-branch normalized posteriors.

Action keys:
    ("grasp", i) | ("ask_color",) | ("ask_loc",) | ("point", i)
    ("obj_attr", i, concept, value)   (per-object semantic question)

Tie rule (must match the package): values within 1e-12 are ties, resolved by
the enumeration order of the action list, which places grasps before cheaper
questions before pointing.
"""

TIE_TOL = 1e-12


def _argmax_index(belief):
    best, best_p = 0, belief[0]
    for i in range(1, len(belief)):
        if belief[i] > best_p:
            best, best_p = i, belief[i]
    return best


def _actions_attr(belief, color, loc, t):
    xb = _argmax_index(belief)
    return [("grasp", xb), ("ask_color",), ("ask_loc",), ("point", xb)]


def _actions_point_only(belief, color, loc, t):
    n = len(belief)
    return [("grasp", i) for i in range(n)] + [("point", i) for i in range(n)]


def _actions_per_object(belief, color, loc, t):
    n = len(belief)
    sem = []
    for i in range(n):
        for concept, rows in (("color", color), ("loc", loc)):
            row = rows[i]
            best = 0
            for j in range(1, len(row)):
                if row[j] > row[best]:
                    best = j
            sem.append(("obj_attr", i, concept, best))
    return [("grasp", i) for i in range(n)] + sem + [("point", i) for i in range(n)]


_ACTION_SETS = {
    "attr": _actions_attr,
    "point_only": _actions_point_only,
    "per_object": _actions_per_object,
}


def _branches(action, n, color, loc, t):
    """List of per-observation likelihood vectors (one entry per object)."""
    if action[0] == "ask_color":
        m = len(color[0])
        return [[color[x][j] for x in range(n)] for j in range(m)]
    if action[0] == "ask_loc":
        m = len(loc[0])
        return [[loc[x][j] for x in range(n)] for j in range(m)]
    if action[0] == "point":
        i = action[1]
        yes = [t if x == i else 1.0 - t for x in range(n)]
        return [yes, [1.0 - v for v in yes]]
    if action[0] == "obj_attr":
        _, _, concept, value = action
        rows = color if concept == "color" else loc
        yes = [t * rows[x][value] + (1.0 - t) * (1.0 - rows[x][value]) for x in range(n)]
        return [yes, [1.0 - v for v in yes]]
    raise ValueError(action)


def _grasp_leaf(belief, rewards):
    best = max(belief)
    return rewards["grasp_wrong"] + (rewards["grasp_correct"] - rewards["grasp_wrong"]) * best


def oracle_action_value(belief, action, depth, color, loc, t, rewards, gamma, mode):
    n = len(belief)
    if action[0] == "grasp":
        p = belief[action[1]]
        return rewards["grasp_wrong"] + (rewards["grasp_correct"] - rewards["grasp_wrong"]) * p
    cost = rewards["ask_attr"] if action[0] in ("ask_color", "ask_loc", "obj_attr") else rewards["ask_point"]
    total = 0.0
    for lik in _branches(action, n, color, loc, t):
        p_obs = 0.0
        for x in range(n):
            p_obs += belief[x] * lik[x]
        if p_obs <= 0.0:
            continue
        child = [belief[x] * lik[x] / p_obs for x in range(n)]
        if depth == 1:
            v = _grasp_leaf(child, rewards)
        else:
            v = oracle_value(child, depth - 1, color, loc, t, rewards, gamma, mode)
        total += p_obs * v
    return cost + gamma * total


def oracle_value(belief, depth, color, loc, t, rewards, gamma, mode):
    best = None
    for action in _ACTION_SETS[mode](belief, color, loc, t):
        q = oracle_action_value(belief, action, depth, color, loc, t, rewards, gamma, mode)
        if best is None or q > best:
            best = q
    return best


def oracle_plan(belief, depth, color, loc, t=0.99, rewards=None, gamma=1.0, mode="attr"):
    """Returns (best action key, {action key: value})."""
    if rewards is None:
        rewards = {"ask_attr": -0.1, "ask_point": -0.3, "grasp_correct": 1.0, "grasp_wrong": -1.0}
    best_action, best_q = None, None
    values = {}
    for action in _ACTION_SETS[mode](belief, color, loc, t):
        q = oracle_action_value(belief, action, depth, color, loc, t, rewards, gamma, mode)
        values[action] = q
        if best_q is None or q > best_q + TIE_TOL:
            best_action, best_q = action, q
    return best_action, values
