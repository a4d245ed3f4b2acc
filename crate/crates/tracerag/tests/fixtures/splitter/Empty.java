package demo.empty;

public class Empty {
}
