"""Fixed prompt strings used by the engine and context manager.

These are part of the public contract: script authors match on them, and
they are documented verbatim in the README. Change them and every scripted
fixture that matches on their wording breaks.
"""

DEFAULT_FINAL_MARKER = "FINAL:"

CRITIQUE_PROMPT = (
    "Pause and critique your progress so far: what worked, what failed, and "
    "what you will change next turn. Reply in one short paragraph."
)

SUMMARIZE_PROMPT = (
    "You compress agent conversations. Summarize the excerpt below into a "
    "compact note that preserves decisions, facts, tool results, and open "
    "questions. Reply with the summary only."
)

RESEARCH_PROMPT = (
    "You are a research agent. Use the available tools to retrieve sources, "
    "reflect on what you find, and refine your understanding before "
    "answering. When confident, reply with a line starting with 'FINAL:' "
    "followed by your answer."
)
