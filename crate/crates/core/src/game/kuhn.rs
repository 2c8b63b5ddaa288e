//! Kuhn poker generators.
//!
//! Each player antes one chip and receives one card from a deck of
//! `players + 1` cards. Players act in seat order choosing `check` or `bet`
//! (a fixed bet of one chip) until somebody bets; every other player then
//! chooses `fold` or `call` in seat order after the bettor. A lone remaining
//! player takes the pot, otherwise the highest card among the players still
//! in wins. Payoffs are net chip profits.
//!
//! All deals hang off a single chance node, in lexicographic order of the
//! dealt cards. Histories use `k` check, `b` bet, `f` fold, `c` call, and
//! information sets are labelled `"<card>/<history>"`.

use super::{ExtensiveFormGame, Number, Pin, PinList, TreeNode};

const CARDS: [&str; 5] = ["J", "Q", "K", "A", "2"];

/// Kuhn poker for `players` players (2 ≤ players ≤ 4).
pub fn generate_kuhn(players: usize) -> ExtensiveFormGame {
    assert!((2..=4).contains(&players), "kuhn supports 2 to 4 players");
    let deck = players + 1;
    let mut deals = Vec::new();
    permutations(deck, players, &mut Vec::new(), &mut deals);
    let prob = Number::ratio(1, deals.len() as i64);
    let outcomes = deals
        .into_iter()
        .map(|deal| {
            let label: String = deal.iter().map(|&c| CARDS[c]).collect();
            (label, prob, betting(&deal, &mut String::new()))
        })
        .collect();
    let root = TreeNode::Chance {
        label: "deal".into(),
        outcomes,
    };
    let names = (1..=players).map(|p| format!("Player {p}")).collect();
    ExtensiveFormGame::from_tree(format!("{players}-player Kuhn poker"), names, root)
        .expect("generated Kuhn tree is well formed")
}

pub fn generate_kuhn3() -> ExtensiveFormGame {
    generate_kuhn(3)
}

pub fn generate_kuhn2() -> ExtensiveFormGame {
    generate_kuhn(2)
}

fn permutations(deck: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == k {
        out.push(cur.clone());
        return;
    }
    for c in 0..deck {
        if !cur.contains(&c) {
            cur.push(c);
            permutations(deck, k, cur, out);
            cur.pop();
        }
    }
}

/// Whose turn it is after `history`, or `None` at a terminal.
fn to_act(n: usize, history: &str) -> Option<usize> {
    let h = history.as_bytes();
    match h.iter().position(|&a| a == b'b') {
        None if h.len() < n => Some(h.len()),
        None => None,
        Some(bettor) => {
            let responses = h.len() - bettor - 1;
            if responses == n - 1 {
                None
            } else {
                Some((bettor + 1 + responses) % n)
            }
        }
    }
}

fn payoffs(deal: &[usize], history: &str) -> Vec<Number> {
    let n = deal.len();
    let h = history.as_bytes();
    let mut put = vec![1i64; n];
    let mut live = vec![true; n];
    if let Some(bettor) = h.iter().position(|&a| a == b'b') {
        put[bettor] += 1;
        for (k, &a) in h[bettor + 1..].iter().enumerate() {
            let p = (bettor + 1 + k) % n;
            match a {
                b'c' => put[p] += 1,
                _ => live[p] = false,
            }
        }
    }
    let pot: i64 = put.iter().sum();
    let winner = (0..n)
        .filter(|&p| live[p])
        .max_by_key(|&p| deal[p])
        .expect("someone is live");
    (0..n)
        .map(|p| Number::from(if p == winner { pot } else { 0 } - put[p]))
        .collect()
}

fn betting(deal: &[usize], history: &mut String) -> TreeNode {
    let n = deal.len();
    match to_act(n, history) {
        None => TreeNode::Terminal {
            label: history.clone(),
            payoffs: payoffs(deal, history),
        },
        Some(p) => {
            let facing_bet = history.contains('b');
            let acts: [(&str, char); 2] = if facing_bet {
                [("fold", 'f'), ("call", 'c')]
            } else {
                [("check", 'k'), ("bet", 'b')]
            };
            let key = format!("{}/{}", CARDS[deal[p]], history);
            let actions = acts
                .iter()
                .map(|&(name, ch)| {
                    history.push(ch);
                    let child = betting(deal, history);
                    history.pop();
                    (name.to_string(), child)
                })
                .collect();
            TreeNode::Decision {
                label: String::new(),
                player: p,
                key: key.clone(),
                infoset_label: key,
                actions,
            }
        }
    }
}

/// The four dominated-action families for three-player Kuhn poker:
/// calling a bet with the Jack, folding to a bet with the Ace, calling with
/// the Queen after a bet and a call, and checking the Ace after two checks.
pub fn kuhn3_pins(game: &ExtensiveFormGame) -> PinList {
    let mut pins = Vec::new();
    for info in game.infosets() {
        let (card, history) = match info.label.split_once('/') {
            Some(x) => x,
            None => continue,
        };
        let facing_bet = history.contains('b');
        let after_bet_call = history
            .find('b')
            .is_some_and(|i| history[i + 1..].contains('c'));
        let pinned = match card {
            "J" if facing_bet => Some("call"),
            "A" if facing_bet => Some("fold"),
            "Q" if after_bet_call => Some("call"),
            "A" if history == "kk" => Some("check"),
            _ => None,
        };
        if let Some(action) = pinned {
            pins.push(Pin {
                player: info.player,
                infoset: info.index,
                action: action.to_string(),
            });
        }
    }
    PinList::new(pins)
}
