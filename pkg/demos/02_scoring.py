"""
Frame accuracy and the three role metrics
=========================================

"""

from frameparse import AnnotatedExample, RoleAssignment, TokenSpan, evaluate

tokens = tuple("The rain dripped down his neck .".split())


def parse(frame, *roles):
    return AnnotatedExample(tokens, TokenSpan(2, 2), frame,
                            tuple(RoleAssignment(lab, TokenSpan(s, e)) for lab, s, e in roles))


gold = [parse("Fluidic_motion", ("Fluid", 0, 1), ("Path", 3, 5))]
pred = [parse("Fluidic_motion", ("Fluid", 0, 1), ("Path", 4, 5))]

# Exact counts whole spans, Soft averages per-instance token overlap,
# Global counts (label, token) pairs across the test set
report = evaluate(pred, gold)
print(report.table())

# a wrong frame turns every predicted role into a false positive ...
print(evaluate([parse("Emptying", ("Fluid", 0, 1))], gold).exact)
# ... unless role scoring is decoupled from the frame
print(evaluate([parse("Emptying", ("Fluid", 0, 1))], gold, frame_penalty=False).exact)
