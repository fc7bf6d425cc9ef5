"""Prompt construction for eliciting game judgments from language models.

The system and task texts are fixed templates (including their original
typos, which are preserved deliberately so elicitations are reproducible);
only the game description block varies. ``game_description`` renders any
``GameSpec`` into the two-line "Board size / Win conditions" form the
templates expect.
"""

from __future__ import annotations

from enum import Enum

from .games import CompletionEffect, GameSpec, Infinite, LineRule


class Query(Enum):
    PAYOFF = "payoff"
    FUNNESS = "funness"


class PromptMode(Enum):
    DIRECT = "direct"
    COT = "cot"
    REASONING = "reasoning"


PAYOFF_SYSTEM_PROMPT = """\
Welcome! We are conducting an experiment to understand how people think about games. Your answers will be used to inform cognitive science and AI research.

In this experiment, you will be reading short descriptions of board games and answering two simple questions about each game.

Each game is played by players who take turns by placing pieces on a grid, similar to games like Connect 4, Gomoku (5-in-a-row), or Tic-Tac-Toe.

You will be reading descriptions of games in which the size of the board and the rules for winning vary. We will always show you an example game board from each description. For example, you might read a description like:
- The board in this game is a 5x5 grid.
- In this game, the rule is that the first player to make 3 in a row wins.

Then, for each game, your task is to answer: assuming both players play reasonably -- if the game does not end in a draw, how likely is it that the first player is going to win (not draw), and how likely is a draw

You will answer this question by providing a response (in the form of a number) between 0 and 100.

Before you answer the question for each game, you will have as much time as you want to think about the game and its rules.

Afer you feel like you understand the game, you can provide your response.

For each game, you can write on a scratchpad to think about the game before you answer.

We encourage you to take your time and carefully analyze the game before providing your answer."""

FUNNESS_SYSTEM_PROMPT = """\
 Welcome! We are conducting an experiment to understand how people think about games. Your answers will be used to inform cognitive science and AI research.

In this experiment, you will be reading short descriptions of board games and answering a simple question about each game.

Each game is played by players who take turns by placing pieces on a grid, similar to games like Connect 4, Gomoku (5-in-a-row), or Tic-Tac-Toe.

You will be reading descriptions of games in which the size of the board and the rules for winning vary. We will always show you an example game board from each description. For example, you might read a description like:
- The board in this game is a 5x5 grid.
- In this game, the rule is that the first player to make 3 in a row wins.",

Then, for each game, your task is to answer: how fun the game is to play

You will answer this question by providing a response (in the form of a number) between 0 and 100.

We ask that you think about funness with respect to this kind of game; that is, games that involve players placing pieces on a grid. You can define fun however you wish.

Before you answer the question for each game, you will have as much time as you want to think about the game and its rules.

Afer you feel like you understand the game, you can provide your response.

For each game, you can write on a scratchpad to think about the game before you answer.

We encourage you to take your time and carefully analyze the game before providing your answer."""

SCRATCHPAD_SENTENCE = "You may first write out your thoughts on a scratchpad."

PAYOFF_TASK_TEMPLATE = """\
Imagine you are playing the following game:

{description}

You will answer two questions. For each question, provide your a single number between 0 and 100.

Q1:
If the game does not end in a draw, assuming both players play reasonably, how likely is it that the first player is going to win (not draw)?

Answer on a scale of 0 to 100.
Let 0 = "First player definitely going to lose",
50 = "Equally likely to win or lose",
100 = "First player definitely going to win"

Q2:
Assuming both players play reasonably, how likely is the game to end in a draw?

Answer on a scale of 0 to 100.
Let 0 = "Impossible to end in a draw"
50 = "Equally likely to end in a draw or not",
100 = "Definitely going to end in a draw"

{scratchpad}When you feel you understand the game and are ready to respond, provide a single number between 0 to 100. Write your responses as a number, in the form RESPONSE-Q1 = <your-numerical-response-to-q1> and RESPONSE-Q2 = <your-numerical-response-to-q2>"""

FUNNESS_TASK_TEMPLATE = """\
Imagine you are playing the following game:

{description}

How fun is this game?

Answer on a scale of 0 to 100.
Let 0 = "The least fun  of this class of grid-based game"
50 = "Neutral"
100 = "The most fun of this class of grid-based game"

{scratchpad}When you feel you understand the game and are ready to respond, provide a single number between 0 to 100. Write your response as a number, in the form RESPONSE = <your-numerical-response>"""


def _board_line(spec: GameSpec) -> str:
    if isinstance(spec.board, Infinite):
        return "infinite"
    return f"{spec.board.rows} x {spec.board.cols}"


def _restriction_phrase(rule: LineRule) -> str:
    if rule is LineRule.NO_DIAGONAL:
        return "cannot win by making a diagonal row (only horizontal and vertical rows count)"
    return "can only win by making a diagonal row"


def _win_condition_sentences(spec: GameSpec) -> list[str]:
    k1, k2 = spec.k_p1, spec.k_p2
    r1, r2 = spec.line_rule_p1, spec.line_rule_p2
    sentences: list[str] = []

    if spec.completion_effect is CompletionEffect.LOSE:
        if k1 == k2:
            sentences.append(f"A player loses if they make {k1} pieces in a row.")
        else:
            sentences.append(
                f"Player 1 loses if they make {k1} pieces in a row, and "
                f"Player 2 loses if they make {k2} pieces in a row."
            )
    elif r1 is r2:
        if k1 == k2:
            base = f"{k1} pieces in a row wins"
        elif k2 < k1:
            base = (
                f"Player 1 needs {k1} pieces in a row to win, "
                f"but Player 2 only needs {k2} pieces in a row to win"
            )
        else:
            base = (
                f"Player 2 needs {k2} pieces in a row to win, "
                f"but Player 1 only needs {k1} pieces in a row to win"
            )
        if r1 is LineRule.NO_DIAGONAL:
            base += ", but a player cannot win by making a diagonal row"
        elif r1 is LineRule.ONLY_DIAGONAL:
            base += ", but a player can only win by making a diagonal row"
        sentences.append(base + ".")
    else:
        if k1 == k2:
            lead = f"Each player needs {k1} pieces in a row to win."
        else:
            lead = (
                f"Player 1 needs {k1} pieces in a row to win, "
                f"and Player 2 needs {k2} pieces in a row to win."
            )
        sentences.append(lead)
        if r1 is not LineRule.ALL and r2 is LineRule.ALL:
            sentences.append(
                f"The first player {_restriction_phrase(r1)}, "
                "but the second player does not have this restriction."
            )
        elif r2 is not LineRule.ALL and r1 is LineRule.ALL:
            sentences.append(
                f"The second player {_restriction_phrase(r2)}, "
                "but the first player does not have this restriction."
            )
        else:
            sentences.append(
                f"The first player {_restriction_phrase(r1)}, "
                f"and the second player {_restriction_phrase(r2)}."
            )

    if spec.opening_placements_p1 > 1:
        sentences.append(
            f"Player 1 can place {spec.opening_placements_p1} pieces as their first move."
        )
    if spec.opening_placements_p2 > 1:
        sentences.append(
            f"Player 2 can place {spec.opening_placements_p2} pieces as their first move."
        )
    return sentences


def game_description(spec: GameSpec) -> str:
    """Two-line description of a game, as shown to evaluators."""
    conditions = " ".join(_win_condition_sentences(spec))
    return f"Board size: {_board_line(spec)}\nWin conditions: {conditions}"


def build_prompt(
    spec: GameSpec,
    query: Query,
    mode: PromptMode,
    inline_system: bool = False,
) -> tuple[str, str]:
    """Render the (system, user) prompt pair for one game and query.

    COT and REASONING include the scratchpad invitation; DIRECT omits it.
    With ``inline_system`` (for providers lacking a system channel) the
    system text is prepended to the user text and the system slot is
    returned empty.
    """
    if not isinstance(query, Query):
        raise ValueError(f"query must be a Query, got {query!r}")
    if not isinstance(mode, PromptMode):
        raise ValueError(f"mode must be a PromptMode, got {mode!r}")
    scratchpad = "" if mode is PromptMode.DIRECT else SCRATCHPAD_SENTENCE + "\n"
    description = game_description(spec)
    if query is Query.PAYOFF:
        system = PAYOFF_SYSTEM_PROMPT
        user = PAYOFF_TASK_TEMPLATE.format(description=description, scratchpad=scratchpad)
    else:
        system = FUNNESS_SYSTEM_PROMPT
        user = FUNNESS_TASK_TEMPLATE.format(description=description, scratchpad=scratchpad)
    if inline_system:
        return "", system + "\n\n" + user
    return system, user
