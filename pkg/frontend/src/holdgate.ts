// Hold-to-reveal guard for the exit control: a tap shows nothing, a hold of
// at least the threshold reveals it, releasing hides it again unless the
// exit confirmation round-trip is already in flight.

export const HOLD_REVEAL_MS = 300;

export class HoldGate {
  private pressedAt: number | null = null;
  private confirming = false;

  press(now: number): void {
    if (this.pressedAt === null) this.pressedAt = now;
  }

  release(): void {
    this.pressedAt = null;
  }

  beginConfirm(): void {
    this.confirming = true;
  }

  endConfirm(): void {
    this.confirming = false;
  }

  visible(now: number): boolean {
    if (this.confirming) return true;
    return this.pressedAt !== null && now - this.pressedAt >= HOLD_REVEAL_MS;
  }
}
