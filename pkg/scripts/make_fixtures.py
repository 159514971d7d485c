#!/usr/bin/env python3
"""Regenerate the bundled SimApp fixture suite and its semantic scripted rules.

Run from the repo root:  python scripts/make_fixtures.py
Outputs land in src/ui_miner/fixtures/.
"""

from __future__ import annotations

import json
from pathlib import Path

from ui_miner.hierarchy import Rect, ViewNode, ViewTree, serialize_hierarchy

OUT_DIR = Path(__file__).resolve().parent.parent / "src" / "ui_miner" / "fixtures"

SCREEN_W, SCREEN_H = 1080, 1920


def n(
    cls: str,
    rid: str = "",
    text: str = "",
    desc: str = "",
    b: tuple[int, int, int, int] = (0, 0, SCREEN_W, SCREEN_H),
    clickable: bool = False,
    long_clickable: bool = False,
    scrollable: bool = False,
    children: tuple = (),
) -> ViewNode:
    return ViewNode(
        widget_class=f"android.widget.{cls}",
        resource_id=rid,
        text=text,
        content_desc=desc,
        bounds=Rect(*b),
        clickable=clickable,
        long_clickable=long_clickable,
        scrollable=scrollable,
        editable=cls.endswith("EditText"),
        enabled=True,
        children=list(children),
    )


def row(i: int) -> tuple[int, int, int, int]:
    top = 360 + i * 200
    return (140, top, 940, top + 150)


def screen(*children: ViewNode) -> str:
    root = n("FrameLayout", children=children)
    counter = [0]

    def renumber(node: ViewNode) -> None:
        node.draw_index = counter[0]
        counter[0] += 1
        for child in node.children:
            renumber(child)

    renumber(root)
    tree = ViewTree(root=root, screen_width=SCREEN_W, screen_height=SCREEN_H)
    return serialize_hierarchy(tree)


def title(text: str) -> ViewNode:
    return n("TextView", text=text, b=(140, 120, 940, 260))


def button(rid: str, text: str, i: int, desc: str = "") -> ViewNode:
    return n("Button", rid=rid, text=text, desc=desc, b=row(i), clickable=True)


def edit(rid: str, desc: str, i: int) -> ViewNode:
    return n("EditText", rid=rid, desc=desc, b=row(i), clickable=True)


def checkbox(rid: str, desc: str, i: int) -> ViewNode:
    return n("CheckBox", rid=rid, desc=desc, b=row(i), clickable=True)


def tap(target: str) -> dict:
    return {"kind": "tap", "target": target}


def long_tap(target: str) -> dict:
    return {"kind": "long-tap", "target": target}


def scroll(direction: str) -> dict:
    return {"kind": "scroll", "direction": direction}


def inp(target: str, pattern: str) -> dict:
    return {"kind": "input", "target": target, "value_pattern": pattern}


def t(src: str, on: dict, dst: str, guard: dict | None = None, set_flags: dict | None = None) -> dict:
    entry = {"from": src, "on": on, "to": dst}
    if guard:
        entry["guard"] = guard
    if set_flags:
        entry["set"] = set_flags
    return entry


EMAIL_RX = r"[^@\s]+@[^@\s]+\.[A-Za-z]{2,}"


def act(app: str, name: str) -> str:
    return f"com.fixture.{app}.{name}"


def fixture_chain3() -> dict:
    a = lambda name: act("chain3", name)
    return {
        "app_id": "chain3",
        "declared_activities": [a("StepOneActivity"), a("StepTwoActivity"), a("StepThreeActivity")],
        "screen": {"width": SCREEN_W, "height": SCREEN_H},
        "initial_state": "s0",
        "states": {
            "s0": {
                "activity": a("StepOneActivity"),
                "tree": screen(
                    title("Welcome"),
                    button("next", "Continue", 0),
                    button("banner_ad", "Learn more", 1),
                    button("rate_us", "Rate us", 2),
                ),
            },
            "s1": {
                "activity": a("StepTwoActivity"),
                "tree": screen(
                    title("Step 2 of 3"),
                    n("TextView", text="Almost there", b=(140, 280, 940, 340)),
                    button("next", "Continue", 0),
                    button("banner_ad", "Learn more", 1),
                    button("share_app", "Share", 2),
                ),
            },
            "s2": {
                "activity": a("StepThreeActivity"),
                "terminal": True,
                "tree": screen(title("All done"), button("banner_ad", "Learn more", 1)),
            },
        },
        "transitions": [
            t("s0", tap("next"), "s1"),
            t("s1", tap("next"), "s2"),
        ],
    }


def fixture_deep_chain6() -> dict:
    a = lambda name: act("deepchain", name)
    activities = [a(f"Stage{i}Activity") for i in range(6)]
    states = {}
    transitions = []
    decoys = ["promo", "help_center", "share_sheet", "settings_icon"]
    for i in range(6):
        children = [title(f"Stage {i + 1} of 6")]
        if i < 5:
            children.append(button("continue_btn", "Continue", 0))
        # Consecutive stages must differ structurally or the session's
        # stuck detector (hash-based, text-blind) would back out of the chain.
        for j, rid in enumerate(decoys[: 2 + (i % 3)]):
            children.append(button(rid, rid.replace("_", " ").title(), j + 1))
        states[f"s{i}"] = {
            "activity": activities[i],
            "terminal": i == 5,
            "tree": screen(*children),
        }
        if i < 5:
            transitions.append(t(f"s{i}", tap("continue_btn"), f"s{i + 1}"))
    return {
        "app_id": "deep_chain6",
        "declared_activities": activities,
        "screen": {"width": SCREEN_W, "height": SCREEN_H},
        "initial_state": "s0",
        "states": states,
        "transitions": transitions,
    }


def fixture_email_login() -> dict:
    a = lambda name: act("maildrop", name)
    return {
        "app_id": "email_login",
        "declared_activities": [a("LoginActivity"), a("InboxActivity"), a("ComposeActivity")],
        "screen": {"width": SCREEN_W, "height": SCREEN_H},
        "initial_state": "login",
        "states": {
            "login": {
                "activity": a("LoginActivity"),
                "tree": screen(
                    title("Sign in to MailDrop"),
                    edit("email", "Email address", 0),
                    edit("mobile", "Mobile number (9 digits)", 1),
                    button("submit", "Sign in", 2),
                    button("forgot_password", "Forgot password?", 3),
                    button("help_link", "Help", 4),
                ),
            },
            "inbox": {
                "activity": a("InboxActivity"),
                "tree": screen(
                    title("Inbox"),
                    button("compose", "Compose", 0),
                    button("search_mail", "Search", 1),
                    button("menu", "Menu", 2),
                ),
            },
            "compose": {
                "activity": a("ComposeActivity"),
                "terminal": True,
                "tree": screen(title("New message"), button("discard", "Discard", 0)),
            },
        },
        "transitions": [
            t("login", inp("email", EMAIL_RX), "login", set_flags={"email_ok": True}),
            t("login", inp("mobile", r"[0-9]{9}"), "login", set_flags={"mobile_ok": True}),
            t(
                "login",
                tap("submit"),
                "inbox",
                guard={"email_ok": True, "mobile_ok": True},
            ),
            t("inbox", tap("compose"), "compose"),
        ],
        "back": {"inbox": "login", "compose": "inbox"},
    }


def fixture_policy_gate() -> dict:
    a = lambda name: act("consent", name)
    return {
        "app_id": "policy_gate",
        "declared_activities": [a("ConsentActivity"), a("DashboardActivity"), a("DetailActivity")],
        "screen": {"width": SCREEN_W, "height": SCREEN_H},
        "initial_state": "consent",
        "states": {
            "consent": {
                "activity": a("ConsentActivity"),
                "tree": screen(
                    title("Before you start"),
                    checkbox("checkbox_policy", "Accept the privacy policy", 0),
                    button("agree", "Agree", 1),
                    button("decline", "Decline", 2),
                    button("terms_link", "Read terms", 3),
                ),
            },
            "dashboard": {
                "activity": a("DashboardActivity"),
                "tree": screen(
                    title("Dashboard"),
                    button("open_detail", "Open report", 0),
                    button("refresh", "Refresh", 1),
                ),
            },
            "detail": {
                "activity": a("DetailActivity"),
                "terminal": True,
                "tree": screen(title("Report detail"), button("export", "Export", 0)),
            },
        },
        "transitions": [
            t(
                "consent",
                tap("checkbox_policy"),
                "consent",
                guard={"policy_checked": False},
                set_flags={"policy_checked": True},
            ),
            t("consent", tap("agree"), "dashboard", guard={"policy_checked": True}),
            t("dashboard", tap("open_detail"), "detail"),
        ],
        "back": {"dashboard": "consent", "detail": "dashboard"},
    }


def fixture_multilingual_quiz() -> dict:
    a = lambda name: act("polyglot", name)
    return {
        "app_id": "multilingual_quiz",
        "declared_activities": [
            a("QuizGermanActivity"),
            a("QuizFrenchActivity"),
            a("QuizSpanishActivity"),
            a("QuizDoneActivity"),
        ],
        "screen": {"width": SCREEN_W, "height": SCREEN_H},
        "initial_state": "de",
        "states": {
            "de": {
                "activity": a("QuizGermanActivity"),
                "tree": screen(
                    title("Wie viel ist zwei plus zwei?"),
                    button("answer_a", "Drei", 0),
                    button("answer_b", "Vier", 1),
                    button("answer_c", "Fünf", 2),
                ),
            },
            "fr": {
                "activity": a("QuizFrenchActivity"),
                "tree": screen(
                    title("Combien font trois plus trois?"),
                    n("ProgressBar", b=(140, 280, 940, 320)),
                    button("answer_a", "Six", 0),
                    button("answer_b", "Sept", 1),
                    button("answer_c", "Cinq", 2),
                ),
            },
            "es": {
                "activity": a("QuizSpanishActivity"),
                "tree": screen(
                    title("¿Cuánto es cinco menos dos?"),
                    n("ProgressBar", b=(140, 280, 940, 320)),
                    n("ImageView", desc="Flag", b=(440, 1700, 640, 1800)),
                    button("answer_a", "Dos", 0),
                    button("answer_b", "Cuatro", 1),
                    button("answer_c", "Tres", 2),
                ),
            },
            "done": {
                "activity": a("QuizDoneActivity"),
                "terminal": True,
                "tree": screen(title("Perfekt! Parfait! ¡Perfecto!")),
            },
        },
        "transitions": [
            t("de", tap("answer_b"), "fr"),
            t("fr", tap("answer_a"), "es"),
            t("es", tap("answer_c"), "done"),
        ],
        "back": {"fr": "de", "es": "fr"},
    }


def fixture_visited_hub() -> dict:
    a = lambda name: act("hub", name)
    sections = [
        ("profile", "Profile", "ProfileActivity"),
        ("notifications", "Notifications", "NotificationsActivity"),
        ("privacy", "Privacy", "PrivacyActivity"),
        ("about", "About", "AboutActivity"),
    ]

    def home_tree(visited: int) -> str:
        children = [title("Settings")]
        for i, (rid, label, _) in enumerate(sections):
            text = f"{label} ✓" if i < visited else label
            children.append(button(rid, text, i))
        return screen(*children)

    states = {}
    transitions = []
    back = {}
    for visited in range(4):
        states[f"home{visited}"] = {"activity": a("HomeActivity"), "tree": home_tree(visited)}
    for i, (rid, label, activity) in enumerate(sections):
        terminal = i == len(sections) - 1
        states[f"sec_{rid}"] = {
            "activity": a(activity),
            "terminal": terminal,
            "tree": screen(
                title(label),
                button("back_home", "Back to settings", 0),
                button("toggle_" + rid, "Toggle " + label.lower(), 1),
            ),
        }
        # Every home variant opens every section; back_home advances the
        # checkmark progression the semantic rules key on.
        for v in range(4):
            transitions.append(t(f"home{v}", tap(rid), f"sec_{rid}"))
        if not terminal:
            transitions.append(t(f"sec_{rid}", tap("back_home"), f"home{i + 1}"))
            back[f"sec_{rid}"] = f"home{i + 1}"
        else:
            back[f"sec_{rid}"] = "home3"
    return {
        "app_id": "visited_hub",
        "declared_activities": [a("HomeActivity")] + [a(s[2]) for s in sections],
        "screen": {"width": SCREEN_W, "height": SCREEN_H},
        "initial_state": "home0",
        "states": states,
        "transitions": transitions,
        "back": back,
    }


def fixture_scroll_feed() -> dict:
    a = lambda name: act("feedly", name)
    feed_list = lambda: n(
        "ListView",
        rid="feed_list",
        desc="Top stories",
        b=(0, 300, SCREEN_W, 1700),
        scrollable=True,
    )
    return {
        "app_id": "scroll_feed",
        "declared_activities": [a("FeedActivity"), a("StoryActivity"), a("StoryEndActivity")],
        "screen": {"width": SCREEN_W, "height": SCREEN_H},
        "initial_state": "feed_top",
        "states": {
            "feed_top": {
                "activity": a("FeedActivity"),
                "tree": screen(
                    title("Today"),
                    feed_list(),
                    button("like_1", "Like", 0),
                ),
            },
            "feed_bottom": {
                "activity": a("FeedActivity"),
                "tree": screen(
                    title("Today (more)"),
                    feed_list(),
                    button("story_open", "Read story", 0),
                    button("like_2", "Like", 1),
                ),
            },
            "story": {
                "activity": a("StoryActivity"),
                "tree": screen(
                    title("The story"),
                    n(
                        "ScrollView",
                        rid="story_scroll",
                        desc="Story body",
                        b=(0, 300, SCREEN_W, 1700),
                        scrollable=True,
                    ),
                ),
            },
            "story_end": {
                "activity": a("StoryEndActivity"),
                "terminal": True,
                "tree": screen(title("Thanks for reading"), button("share_story", "Share", 0)),
            },
        },
        "transitions": [
            t("feed_top", scroll("down"), "feed_bottom"),
            t("feed_bottom", tap("story_open"), "story"),
            t("story", scroll("down"), "story_end"),
        ],
        "back": {"feed_bottom": "feed_top", "story": "feed_bottom"},
    }


def fixture_search_flow() -> dict:
    a = lambda name: act("shopper", name)
    return {
        "app_id": "search_flow",
        "declared_activities": [
            a("SearchActivity"),
            a("ResultsActivity"),
            a("DetailActivity"),
            a("GalleryActivity"),
        ],
        "screen": {"width": SCREEN_W, "height": SCREEN_H},
        "initial_state": "search",
        "states": {
            "search": {
                "activity": a("SearchActivity"),
                "tree": screen(
                    title("Find products"),
                    edit("search_box", "Search products", 0),
                    button("go", "Search", 1),
                    button("mic", "Voice search", 2),
                    button("camera_icon", "Photo search", 3),
                ),
            },
            "results": {
                "activity": a("ResultsActivity"),
                "tree": screen(
                    title("Results"),
                    button("result_1", "Red running shoes", 0),
                    button("result_2", "Blue sandals", 1),
                    button("filter", "Filter", 2),
                ),
            },
            "detail": {
                "activity": a("DetailActivity"),
                "tree": screen(
                    title("Red running shoes"),
                    button("view_gallery", "View gallery", 0),
                    button("add_cart", "Add to cart", 1),
                ),
            },
            "gallery": {
                "activity": a("GalleryActivity"),
                "terminal": True,
                "tree": screen(title("Gallery"), button("close_gallery", "Close", 0)),
            },
        },
        "transitions": [
            t("search", inp("search_box", r".{3,}"), "search", set_flags={"query_ok": True}),
            t("search", tap("go"), "results", guard={"query_ok": True}),
            t("results", tap("result_1"), "detail"),
            t("detail", tap("view_gallery"), "gallery"),
        ],
        "back": {"results": "search", "detail": "results", "gallery": "detail"},
    }


def fixture_signup_strong() -> dict:
    a = lambda name: act("fortress", name)
    return {
        "app_id": "signup_strong",
        "declared_activities": [a("SignupActivity"), a("VerifyActivity"), a("WelcomeActivity")],
        "screen": {"width": SCREEN_W, "height": SCREEN_H},
        "initial_state": "signup",
        "states": {
            "signup": {
                "activity": a("SignupActivity"),
                "tree": screen(
                    title("Create your account"),
                    edit("new_email", "Email address", 0),
                    edit("password", "Password (8+ chars, mixed case, digit)", 1),
                    checkbox("tos_check", "Accept terms of service", 2),
                    button("create_account", "Create account", 3),
                    button("login_instead", "Log in instead", 4),
                ),
            },
            "verify": {
                "activity": a("VerifyActivity"),
                "tree": screen(
                    title("Enter the 6-digit code"),
                    edit("code_box", "Verification code", 0),
                    button("verify_btn", "Verify", 1),
                    button("resend", "Resend code", 2),
                ),
            },
            "welcome": {
                "activity": a("WelcomeActivity"),
                "terminal": True,
                "tree": screen(title("Welcome aboard"), button("tour", "Take the tour", 0)),
            },
        },
        "transitions": [
            t("signup", inp("new_email", EMAIL_RX), "signup", set_flags={"email_ok": True}),
            t(
                "signup",
                inp("password", r"(?=.*[A-Z])(?=.*[a-z])(?=.*\d).{8,}"),
                "signup",
                set_flags={"pw_ok": True},
            ),
            t(
                "signup",
                tap("tos_check"),
                "signup",
                guard={"tos_ok": False},
                set_flags={"tos_ok": True},
            ),
            t(
                "signup",
                tap("create_account"),
                "verify",
                guard={"email_ok": True, "pw_ok": True, "tos_ok": True},
            ),
            t("verify", inp("code_box", r"\d{6}"), "verify", set_flags={"code_ok": True}),
            t("verify", tap("verify_btn"), "welcome", guard={"code_ok": True}),
        ],
        "back": {"verify": "signup", "welcome": "verify"},
    }


def fixture_longpress_menu() -> dict:
    a = lambda name: act("photos", name)
    return {
        "app_id": "longpress_menu",
        "declared_activities": [a("GalleryActivity"), a("ContextMenuActivity"), a("EditorActivity")],
        "screen": {"width": SCREEN_W, "height": SCREEN_H},
        "initial_state": "gallery",
        "states": {
            "gallery": {
                "activity": a("GalleryActivity"),
                "tree": screen(
                    title("Your photos"),
                    n(
                        "ImageView",
                        rid="photo_1",
                        desc="Beach sunset",
                        b=row(0),
                        clickable=True,
                        long_clickable=True,
                    ),
                    button("album_switch", "Albums", 1),
                    button("search_icon", "Search", 2),
                ),
            },
            "menu": {
                "activity": a("ContextMenuActivity"),
                "tree": screen(
                    title("Photo options"),
                    button("edit_option", "Edit", 0),
                    button("delete_option", "Delete", 1),
                    button("cancel_option", "Cancel", 2),
                ),
            },
            "editor": {
                "activity": a("EditorActivity"),
                "terminal": True,
                "tree": screen(title("Editor"), button("crop_tool", "Crop", 0)),
            },
        },
        "transitions": [
            t("gallery", long_tap("photo_1"), "menu"),
            t("menu", tap("edit_option"), "editor"),
            t("menu", tap("cancel_option"), "gallery"),
        ],
        "back": {"menu": "gallery", "editor": "menu"},
    }


def fixture_trap_doors() -> dict:
    a = lambda name: act("maze", name)
    return {
        "app_id": "trap_doors",
        "declared_activities": [
            a("LobbyActivity"),
            a("TrapActivity"),
            a("VaultActivity"),
            a("PrizeActivity"),
        ],
        "screen": {"width": SCREEN_W, "height": SCREEN_H},
        "initial_state": "lobby",
        "states": {
            "lobby": {
                "activity": a("LobbyActivity"),
                "tree": screen(
                    title("Pick a door"),
                    button("door_a", "Door A", 0),
                    button("door_b", "Door B", 1),
                    button("door_c", "Door C", 2),
                    button("vault_door", "Vault door", 3),
                ),
            },
            "trap": {
                "activity": a("TrapActivity"),
                "tree": screen(
                    title("A bare room"),
                    button("blank_wall", "Blank wall", 0),
                    button("escape_hatch", "Escape hatch", 1),
                ),
            },
            "vault": {
                "activity": a("VaultActivity"),
                "tree": screen(
                    title("The vault"),
                    button("open_prize", "Open the chest", 0),
                    button("dial_1", "Dial 1", 1),
                    button("dial_2", "Dial 2", 2),
                ),
            },
            "prize": {
                "activity": a("PrizeActivity"),
                "terminal": True,
                "tree": screen(title("Treasure!")),
            },
        },
        "transitions": [
            t("lobby", tap("door_a"), "trap"),
            t("lobby", tap("door_b"), "trap"),
            t("lobby", tap("door_c"), "trap"),
            t("lobby", tap("vault_door"), "vault"),
            t("trap", tap("escape_hatch"), "vault"),
            t("vault", tap("open_prize"), "prize"),
        ],
        "back": {"trap": "lobby", "vault": "lobby", "prize": "vault"},
    }


SEMANTIC_RULES = [
    # chain3 / deep_chain6
    {"match": "id=next ", "reply": "[tap] [next]"},
    {"match": "id=continue_btn ", "reply": "[tap] [continue_btn]"},
    # email_login
    {
        "match": "id=email ",
        "reply": "1. [input] [email] [example@gmail.com]\n"
        "2. [input] [mobile] [123456789]\n3. [tap] [submit]",
    },
    {"match": "id=compose ", "reply": "[tap] [compose]"},
    # policy_gate
    {
        "match": "id=checkbox_policy ",
        "reply": "1. [tap] [checkbox_policy]\n2. [tap] [agree]",
    },
    {"match": "id=open_detail ", "reply": "[tap] [open_detail]"},
    # multilingual_quiz (keyed on answer texts, unique per screen)
    {"match": 'text="Vier"', "reply": "[tap] [answer_b]"},
    {"match": 'text="Six"', "reply": "[tap] [answer_a]"},
    {"match": 'text="Tres"', "reply": "[tap] [answer_c]"},
    # visited_hub: most-progressed home screens first
    {"match": 'text="Privacy ✓"', "reply": "[tap] [about]"},
    {"match": 'text="Notifications ✓"', "reply": "[tap] [privacy]"},
    {"match": 'text="Profile ✓"', "reply": "[tap] [notifications]"},
    {"match": "id=back_home ", "reply": "[tap] [back_home]"},
    {"match": "id=profile ", "reply": "[tap] [profile]"},
    # scroll_feed (story_open rule must precede the generic feed scroll)
    {"match": "id=story_open ", "reply": "[tap] [story_open]"},
    {"match": "id=feed_list ", "reply": "[scroll] [down]"},
    {"match": "id=story_scroll ", "reply": "[scroll] [down]"},
    # search_flow
    {
        "match": "id=search_box ",
        "reply": "1. [input] [search_box] [running shoes]\n2. [tap] [go]",
    },
    {"match": "id=result_1 ", "reply": "[tap] [result_1]"},
    {"match": "id=view_gallery ", "reply": "[tap] [view_gallery]"},
    # signup_strong
    {
        "match": "id=new_email ",
        "reply": "1. [input] [new_email] [example@gmail.com]\n"
        "2. [input] [password] [Aa1!aaaa]\n"
        "3. [tap] [tos_check]\n4. [tap] [create_account]",
    },
    {
        "match": "id=code_box ",
        "reply": "1. [input] [code_box] [482913]\n2. [tap] [verify_btn]",
    },
    # longpress_menu
    {"match": "id=photo_1 ", "reply": "[long-tap] [photo_1]"},
    {"match": "id=edit_option ", "reply": "[tap] [edit_option]"},
    # trap_doors: route through the trap so its activity is covered too
    {"match": "id=vault_door ", "reply": "[tap] [door_a]"},
    {"match": "id=escape_hatch ", "reply": "[tap] [escape_hatch]"},
    {"match": "id=open_prize ", "reply": "[tap] [open_prize]"},
]


FIXTURES = [
    fixture_chain3,
    fixture_deep_chain6,
    fixture_email_login,
    fixture_policy_gate,
    fixture_multilingual_quiz,
    fixture_visited_hub,
    fixture_scroll_feed,
    fixture_search_flow,
    fixture_signup_strong,
    fixture_longpress_menu,
    fixture_trap_doors,
]


def main() -> None:
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    for build in FIXTURES:
        fixture = build()
        path = OUT_DIR / f"{fixture['app_id']}.json"
        path.write_text(
            json.dumps(fixture, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )
        print(f"wrote {path}")
    rules_path = OUT_DIR / "semantic_rules.json"
    rules_path.write_text(
        json.dumps({"rules": SEMANTIC_RULES, "default_reply": ""}, indent=2, ensure_ascii=False)
        + "\n",
        encoding="utf-8",
    )
    print(f"wrote {rules_path}")


if __name__ == "__main__":
    main()
