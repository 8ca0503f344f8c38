#!/usr/bin/env python3
"""Regenerates the 20-target synthetic suite (corpus files + goals.txt).

Each target draws gadgets from per-architecture building blocks with a fixed
seed. A draw is kept only if `majorca chain` succeeds on it with no
restricted bytes.

usage: make_suite.py <majorca binary> [out dir]
"""
import os
import random
import subprocess
import sys

GOAL = 'execve("/bin/sh",0,0)'
BAD = {0x00, 0x2F}


def clean_addr(rng, base):
    while True:
        a = base + rng.randrange(0x100, 0xF000, 4) + rng.randrange(1, 4)
        if not any(((a >> (8 * i)) & 0xFF) in BAD for i in range(4)):
            return a


X86_LOADERS = [
    ["pop eax ; ret", "pop ebx ; ret", "pop ecx ; ret", "pop edx ; ret"],
    ["pop eax ; ret", "pop ebx ; ret", "pop ecx ; pop edx ; ret"],
    ["pop eax ; pop ebx ; pop ecx ; pop edx ; ret"],
    ["pop esi ; pop edi ; ret", "mov eax, esi ; ret", "mov ebx, edi ; ret", "mov ecx, esi ; ret",
     "mov edx, edi ; ret"],
    ["pop edx ; pop ecx ; pop ebx ; ret", "pop eax ; ret"],
]
X86_STORES = [
    ["mov dword ptr [edx], eax ; ret"],
    ["mov dword ptr [ecx + 4], ebx ; ret"],
    ["mov dword ptr [ebx], eax ; pop ebp ; ret"],
]
X86_ZERO = [
    ["xor ecx, ecx ; ret"],
    ["xor edx, edx ; ret"],
    ["xor ecx, ecx ; ret", "xor edx, edx ; ret"],
    ["xor eax, eax ; ret", "xor ecx, ecx ; ret", "xor edx, edx ; ret"],
    ["xor edx, edx ; ret", "mov ecx, edx ; ret"],
]
X86_ARITH = [
    ["xor eax, ebx ; ret"],
    ["add eax, ebx ; ret"],
    ["sub eax, ecx ; ret"],
    ["add eax, ecx ; pop ebp ; ret"],
    ["xor eax, edx ; ret"],
    ["add ebx, ecx ; ret"],
    ["xor ebx, edx ; ret"],
    ["sub eax, edx ; pop esi ; ret"],
]
X86_NOISE = ["pop ebp ; ret", "inc eax ; ret", "add esp, 0xc ; ret", "pop esi ; pop edi ; pop ebp ; ret",
             "mov eax, ecx ; pop ebx ; ret", "neg eax ; ret", "push eax ; ret", "dec ecx ; ret"]

MIPS_LOADERS = [
    ["lw $ra, 0x24($sp) ; lw $s1, 0x20($sp) ; lw $s0, 0x1c($sp) ; jr $ra ; addiu $sp, $sp, 0x28",
     "lw $ra, 0x1c($sp) ; lw $v0, 0x18($sp) ; jr $ra ; addiu $sp, $sp, 0x20"],
    ["lw $ra, 0x2c($sp) ; lw $s2, 0x28($sp) ; lw $s1, 0x24($sp) ; lw $s0, 0x20($sp) ; jr $ra ; "
     "addiu $sp, $sp, 0x30",
     "lw $ra, 0x1c($sp) ; lw $v0, 0x14($sp) ; jr $ra ; addiu $sp, $sp, 0x20"],
]
MIPS_STORES = [
    ["sw $s1, 0($s0) ; lw $ra, 0x1c($sp) ; jr $ra ; addiu $sp, $sp, 0x20"],
    ["lw $ra, 0x24($sp) ; sw $s1, 0($s0) ; lw $s1, 0x20($sp) ; lw $s0, 0x1c($sp) ; jr $ra ; addiu $sp, $sp, 0x28"],
]
MIPS_MOVES = [
    ["move $a0, $s0 ; lw $ra, 0x1c($sp) ; jr $ra ; addiu $sp, $sp, 0x20",
     "move $a1, $zero ; lw $ra, 0x1c($sp) ; jr $ra ; addiu $sp, $sp, 0x20",
     "move $a2, $zero ; lw $ra, 0x1c($sp) ; jr $ra ; addiu $sp, $sp, 0x20"],
    ["move $a0, $s0 ; move $a1, $zero ; lw $ra, 0x1c($sp) ; jr $ra ; addiu $sp, $sp, 0x20",
     "move $a2, $zero ; lw $ra, 0x1c($sp) ; jr $ra ; addiu $sp, $sp, 0x20"],
]
MIPS_ARITH = [
    ["addu $v0, $s0, $s1 ; lw $ra, 0x1c($sp) ; jr $ra ; addiu $sp, $sp, 0x20"],
    ["subu $v0, $s1, $s2 ; lw $ra, 0x1c($sp) ; jr $ra ; addiu $sp, $sp, 0x20"],
    ["addu $s1, $s1, $s2 ; lw $ra, 0x1c($sp) ; jr $ra ; addiu $sp, $sp, 0x20"],
    ["addu $s1, $s1, $v0 ; lw $ra, 0x1c($sp) ; jr $ra ; addiu $sp, $sp, 0x20"],
    ["xor $v0, $v0, $s1 ; lw $ra, 0x1c($sp) ; jr $ra ; addiu $sp, $sp, 0x20"],
    ["subu $s1, $s1, $v0 ; lw $ra, 0x1c($sp) ; jr $ra ; addiu $sp, $sp, 0x20"],
]

def x86_target(rng):
    body = (rng.choice(X86_LOADERS) + rng.choice(X86_STORES) + rng.choice(X86_ZERO) + sum(rng.sample(X86_ARITH, 3), []) +
            rng.sample(X86_NOISE, 3) + ["int 0x80"])
    lines = ["arch=x86_32", "writable=0x804c100-0x804d000"]
    used = set()
    for g in body:
        a = clean_addr(rng, 0x08040000)
        while a in used:
            a = clean_addr(rng, 0x08040000)
        used.add(a)
        lines.append("0x%x: %s" % (a, g))
    return lines


def mips_target(rng):
    body = (rng.choice(MIPS_LOADERS) + rng.choice(MIPS_STORES) + rng.choice(MIPS_MOVES) + sum(rng.sample(MIPS_ARITH, 3), []) +
            ["syscall"])
    lines = ["arch=mips32be", "writable=0x10430100-0x10431000"]
    used = set()
    for g in body:
        a = clean_addr(rng, 0x10410000) & ~3
        while a in used or any(((a >> (8 * i)) & 0xFF) in BAD for i in range(4)):
            a = clean_addr(rng, 0x10410000) & ~3
        used.add(a)
        lines.append("0x%x: %s" % (a, g))
    return lines


def chains(tool, path):
    r = subprocess.run([tool, "chain", path, GOAL, "--timeout", "20"], capture_output=True)
    return r.returncode == 0


def main():
    tool = sys.argv[1]
    out = sys.argv[2] if len(sys.argv) > 2 else os.path.dirname(os.path.abspath(__file__))
    rng = random.Random(2024)
    goals = []
    n = 0
    while len(goals) < 20:
        make = mips_target if len(goals) >= 14 else x86_target
        lines = make(rng)
        name = "t%02d.corpus" % len(goals)
        path = os.path.join(out, name)
        with open(path, "w") as f:
            f.write("\n".join(lines) + "\n")
        n += 1
        if chains(tool, path):
            goals.append("%s: %s" % (name, GOAL))
        else:
            os.remove(path)
    with open(os.path.join(out, "goals.txt"), "w") as f:
        f.write("# 14 x86_32 and 6 mips32be targets; see make_suite.py\n")
        f.write("\n".join(goals) + "\n")
    print("kept 20 of %d draws" % n)


if __name__ == "__main__":
    main()
