// Keyboard-first interaction: 1-5 pick the finger on the currently selected
// hand (initialized to the dominant-candidate hand), L/R switch hands,
// Enter confirms, S skips. Returns whether the key was consumed.

import { QueueController } from "./queue.js";

export async function handleKey(
  key: string,
  queue: QueueController,
): Promise<boolean> {
  if (queue.done) return false;
  if (/^[1-5]$/.test(key)) {
    queue.selectFinger(Number(key));
    return true;
  }
  switch (key) {
    case "l":
    case "L":
      queue.setHand("L");
      return true;
    case "r":
    case "R":
      queue.setHand("R");
      return true;
    case "Enter":
      await queue.confirm();
      return true;
    case "s":
    case "S":
      await queue.skip();
      return true;
    default:
      return false;
  }
}
